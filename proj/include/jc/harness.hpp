#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jc/backends.hpp"
#include "jc/baselines.hpp"
#include "jc/errors.hpp"
#include "jc/field.hpp"
#include "jc/interaction.hpp"
#include "jc/judge.hpp"
#include "jc/pool_io.hpp"
#include "jc/rng.hpp"
#include "jc/sim.hpp"
#include "jc/solver.hpp"
#include "jc/trace.hpp"

namespace jc {

// ---------------------------------------------------------------------------
// Method selection
// ---------------------------------------------------------------------------

struct MethodSpec {
  std::string name;  // pass1 | bon | sc | wsc | self_certainty | deepconf | kt | jc
  SolveMode jc_mode = SolveMode::answer_level;
  bool exact_interaction_for_j_only = false;  // J_only: exact vs answer-level interaction
  FieldSource field = FieldSource::judge;

  std::string label() const {
    if (name != "jc") return name;
    std::string s = "jc_";
    switch (jc_mode) {
      case SolveMode::exact_J: s += "exact"; break;
      case SolveMode::answer_level: s += "answer_level"; break;
      case SolveMode::h_only: s += "h_only"; break;
      case SolveMode::J_only:
        s += exact_interaction_for_j_only ? "j_only_exact" : "j_only";
        break;
    }
    if (jc_mode != SolveMode::J_only) s += std::string("_") + to_string(field);
    return s;
  }

  static MethodSpec parse(const std::string& s) {
    MethodSpec m;
    if (s == "pass1" || s == "bon" || s == "sc" || s == "wsc" || s == "self_certainty" ||
        s == "deepconf" || s == "kt") {
      m.name = s;
      return m;
    }
    if (s == "jc" || s == "jc_answer_level") {
      m.name = "jc";
      m.jc_mode = SolveMode::answer_level;
      return m;
    }
    if (s == "jc_exact") {
      m.name = "jc";
      m.jc_mode = SolveMode::exact_J;
      return m;
    }
    if (s == "jc_h_only") {
      m.name = "jc";
      m.jc_mode = SolveMode::h_only;
      return m;
    }
    if (s == "jc_j_only") {
      m.name = "jc";
      m.jc_mode = SolveMode::J_only;
      return m;
    }
    if (s == "jc_j_only_exact") {
      m.name = "jc";
      m.jc_mode = SolveMode::J_only;
      m.exact_interaction_for_j_only = true;
      return m;
    }
    throw Error("unknown method: " + s);
  }
};

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct PoolSpec {
  std::string path;
  std::string sidecar;   // ground truth for the sim judge (defaults to <path>.sidecar.json)
  std::string question;  // question text; defaults to the pool's question_id
  std::string dataset;   // reporting key; defaults to the file stem
};

struct JudgeSetup {
  std::string backend = "sim";  // sim | scripted | http
  std::string fixture_path;     // scripted replies
  std::string endpoint;
  std::string url_path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "JC_JUDGE_API_KEY";
  std::string auth_header = "Authorization";
  JudgeConfig cfg;
  std::string cache_path;   // persistent judge cache (JSONL)
  std::string ledger_sink;  // per-call cost entries (JSONL)
};

struct ExperimentConfig {
  std::vector<PoolSpec> pools;
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> n_grid;  // empty -> use each full pool
  std::vector<double> mu_grid = {0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 20.0};
  std::vector<std::size_t> kappa_grid = {4};
  int m = 1;
  int trials = 10;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  double tau = 1.0;
  double self_certainty_q = 2.0;
  std::size_t deepconf_window = 2048;
  std::size_t kt_budget = 0;  // 0 -> m*kappa*(kappa-1), or N-1 when kappa < 2
  Normalizer normalizer = Normalizer::exact;
  JudgeSetup judge;

  void validate() const {
    if (pools.empty()) throw Error("sweep: no pools configured");
    if (methods.empty()) throw Error("sweep: no methods configured");
    if (trials < 1) throw Error("sweep: trials must be >= 1");
    if (mu_grid.empty() || kappa_grid.empty()) throw Error("sweep: grids must be non-empty");
    if (m < 1) throw Error("sweep: m must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Result rows
// ---------------------------------------------------------------------------

struct ResultRow {
  std::string dataset;
  std::string question_id;
  std::string method;
  std::size_t n = 0;
  double mu = 0.0;
  std::size_t kappa = 0;
  std::size_t trial = 0;
  std::string chosen;
  int correct = -1;  // 1 correct, 0 wrong, -1 unknown (no labels)
  long long judge_calls = 0;
  long long input_tokens = 0;
  long long output_tokens = 0;
  long long cost_nanousd = 0;
  std::string status = "ok";

  std::string sort_key() const;
};

struct AggregateRow {
  std::string dataset;
  std::string method;
  std::size_t n = 0;
  double mu = 0.0;
  std::size_t kappa = 0;
  int trials = 0;
  bool has_accuracy = false;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  long long judge_calls = 0;
  long long cost_nanousd = 0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

inline std::string format_usd(long long nano) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", static_cast<double>(nano) / 1e9);
  return std::string(buf);
}

}  // namespace detail

inline std::string ResultRow::sort_key() const {
  std::ostringstream os;
  os << dataset << '\x1f' << question_id << '\x1f' << method << '\x1f';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%012zu\x1f%024.12f\x1f%012zu\x1f%012zu", n, mu, kappa, trial);
  os << buf;
  return os.str();
}

/// Trial rows plus aggregates that are recomputable from them.
struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  void sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
      return a.sort_key() < b.sort_key();
    });
  }

  /// Mean accuracy +/- sample standard deviation per cell, where one trial's
  /// accuracy is its fraction of correct questions.
  void recompute_aggregates() {
    aggregates.clear();
    std::map<std::string, std::vector<const ResultRow*>> cells;
    for (const ResultRow& r : rows) {
      char nums[96];
      std::snprintf(nums, sizeof(nums), "%012zu\x1f%024.12f\x1f%012zu", r.n, r.mu, r.kappa);
      std::ostringstream key;
      key << r.dataset << '\x1f' << r.method << '\x1f' << nums;
      cells[key.str()].push_back(&r);
    }
    for (auto& [key, cell] : cells) {
      AggregateRow agg;
      agg.dataset = cell.front()->dataset;
      agg.method = cell.front()->method;
      agg.n = cell.front()->n;
      agg.mu = cell.front()->mu;
      agg.kappa = cell.front()->kappa;
      std::map<std::size_t, std::pair<int, int>> per_trial;  // trial -> (correct, scored)
      for (const ResultRow* r : cell) {
        agg.judge_calls += r->judge_calls;
        agg.cost_nanousd += r->cost_nanousd;
        per_trial.emplace(r->trial, std::make_pair(0, 0));
        if (r->correct >= 0) {
          per_trial[r->trial].second += 1;
          per_trial[r->trial].first += r->correct;
        }
      }
      agg.trials = static_cast<int>(per_trial.size());
      std::vector<double> accs;
      for (auto& [trial, cs] : per_trial)
        if (cs.second > 0) accs.push_back(static_cast<double>(cs.first) / cs.second);
      if (!accs.empty()) {
        agg.has_accuracy = true;
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        agg.acc_mean = mean;
        agg.acc_std = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
      }
      aggregates.push_back(std::move(agg));
    }
  }

  std::string rows_csv() const {
    std::ostringstream os;
    os << "dataset,question_id,method,N,mu,kappa,trial,chosen,correct,judge_calls,input_tokens,"
          "output_tokens,cost_usd,status\n";
    for (const ResultRow& r : rows) {
      os << r.dataset << ',' << r.question_id << ',' << r.method << ',' << r.n << ','
         << detail::format_double(r.mu) << ',' << r.kappa << ',' << r.trial << ',' << r.chosen
         << ',' << (r.correct < 0 ? "" : (r.correct ? "true" : "false")) << ',' << r.judge_calls
         << ',' << r.input_tokens << ',' << r.output_tokens << ','
         << detail::format_usd(r.cost_nanousd) << ',' << r.status << '\n';
    }
    return os.str();
  }

  std::string aggregates_csv() const {
    std::ostringstream os;
    os << "dataset,method,N,mu,kappa,trials,accuracy_mean,accuracy_std,judge_calls,cost_usd\n";
    for (const AggregateRow& a : aggregates) {
      os << a.dataset << ',' << a.method << ',' << a.n << ',' << detail::format_double(a.mu)
         << ',' << a.kappa << ',' << a.trials << ','
         << (a.has_accuracy ? detail::format_double(a.acc_mean) : "") << ','
         << (a.has_accuracy ? detail::format_double(a.acc_std) : "") << ',' << a.judge_calls
         << ',' << detail::format_usd(a.cost_nanousd) << '\n';
    }
    return os.str();
  }

  /// Accuracy-cost pairs per aggregate cell, for external Pareto plotting.
  std::string pareto_csv() const {
    std::ostringstream os;
    os << "dataset,method,N,mu,kappa,accuracy,cost_usd,judge_calls\n";
    for (const AggregateRow& a : aggregates) {
      if (!a.has_accuracy) continue;
      os << a.dataset << ',' << a.method << ',' << a.n << ',' << detail::format_double(a.mu)
         << ',' << a.kappa << ',' << detail::format_double(a.acc_mean) << ','
         << detail::format_usd(a.cost_nanousd) << ',' << a.judge_calls << '\n';
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const ResultRow& r : rows) {
      j["rows"].push_back({{"dataset", r.dataset},
                           {"question_id", r.question_id},
                           {"method", r.method},
                           {"N", r.n},
                           {"mu", r.mu},
                           {"kappa", r.kappa},
                           {"trial", r.trial},
                           {"chosen", r.chosen},
                           {"correct", r.correct < 0 ? nlohmann::json(nullptr)
                                                     : nlohmann::json(r.correct == 1)},
                           {"judge_calls", r.judge_calls},
                           {"input_tokens", r.input_tokens},
                           {"output_tokens", r.output_tokens},
                           {"cost_usd", static_cast<double>(r.cost_nanousd) / 1e9},
                           {"status", r.status}});
    }
    j["aggregates"] = nlohmann::json::array();
    for (const AggregateRow& a : aggregates) {
      nlohmann::json row = {{"dataset", a.dataset}, {"method", a.method},   {"N", a.n},
                            {"mu", a.mu},           {"kappa", a.kappa},     {"trials", a.trials},
                            {"judge_calls", a.judge_calls},
                            {"cost_usd", static_cast<double>(a.cost_nanousd) / 1e9}};
      if (a.has_accuracy) {
        row["accuracy_mean"] = a.acc_mean;
        row["accuracy_std"] = a.acc_std;
      }
      j["aggregates"].push_back(std::move(row));
    }
    return j;
  }

  std::string text_table() const {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-14s %-24s %6s %8s %6s %7s %9s %9s %11s %12s\n", "dataset",
                  "method", "N", "mu", "kappa", "trials", "acc_mean", "acc_std", "calls",
                  "cost_usd");
    os << buf;
    for (const AggregateRow& a : aggregates) {
      std::snprintf(buf, sizeof(buf), "%-14s %-24s %6zu %8s %6zu %7d %9s %9s %11lld %12s\n",
                    a.dataset.c_str(), a.method.c_str(), a.n,
                    detail::format_double(a.mu).c_str(), a.kappa, a.trials,
                    a.has_accuracy ? detail::format_double(a.acc_mean).c_str() : "-",
                    a.has_accuracy ? detail::format_double(a.acc_std).c_str() : "-",
                    a.judge_calls, detail::format_usd(a.cost_nanousd).c_str());
      os << buf;
    }
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Subsampling
// ---------------------------------------------------------------------------

/// Uniform sample of n traces without replacement, preserving pool order.
/// Selection sampling, so every subset is equally likely and the result is a
/// pure function of the RNG state.
inline std::vector<Trace> subsample(const std::vector<Trace>& pool, std::size_t n, Rng& rng) {
  if (n < 1 || n > pool.size())
    throw InsufficientTraces("subsample: requested " + std::to_string(n) + " of " +
                             std::to_string(pool.size()));
  std::vector<Trace> out;
  out.reserve(n);
  std::size_t remaining = pool.size();
  std::size_t needed = n;
  for (std::size_t i = 0; i < pool.size() && needed > 0; ++i, --remaining) {
    if (rng.below(remaining) < needed) {
      out.push_back(pool[i]);
      --needed;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialSpec {
  std::string dataset;
  std::string question_id;
  std::string question;
  MethodSpec method;
  std::size_t n = 0;
  double mu = 0.5;
  std::size_t kappa = 4;
  int m = 1;
  std::size_t trial = 0;
  double tau = 1.0;
  double self_certainty_q = 2.0;
  std::size_t deepconf_window = 2048;
  std::size_t kt_budget = 0;  // 0 -> derived
  Normalizer normalizer = Normalizer::exact;
  int threads = 1;
};

namespace detail {

inline int group_correctness(const Partition& partition, std::size_t group) {
  bool any_label = false;
  for (const Trace& t : partition.pool)
    if (t.label) any_label = true;
  if (!any_label) return -1;
  for (std::size_t i : partition.groups[group].members)
    if (partition.pool[i].label && *partition.pool[i].label) return 1;
  return 0;
}

inline FieldVector build_field(FieldSource source, const std::string& question,
                               const Partition& partition, JudgeGateway& gateway,
                               const TrialSpec& spec) {
  switch (source) {
    case FieldSource::uniform: return uniform_field(partition.n());
    case FieldSource::judge:
      return judge_field(question, partition.pool, gateway, spec.threads).field;
    case FieldSource::self_certainty:
      return self_certainty_field(partition.pool, spec.self_certainty_q);
    case FieldSource::deepconf: return deepconf_tail_field(partition.pool, spec.deepconf_window);
  }
  throw Error("unknown field source");
}

inline std::size_t derived_kt_budget(const TrialSpec& spec, std::size_t n) {
  if (spec.kt_budget > 0) return spec.kt_budget;
  if (spec.kappa >= 2) return static_cast<std::size_t>(spec.m) * spec.kappa * (spec.kappa - 1);
  return n > 1 ? n - 1 : 1;
}

}  // namespace detail

/// Runs one (question, method, N, mu, kappa, trial) cell on an already
/// subsampled pool. Typed errors land in the row's status field instead of
/// aborting the sweep.
inline ResultRow run_trial(const std::vector<Trace>& subpool, const TrialSpec& spec,
                           JudgeGateway& gateway, Rng& rng) {
  ResultRow row;
  row.dataset = spec.dataset;
  row.question_id = spec.question_id;
  row.method = spec.method.label();
  row.n = subpool.size();
  row.mu = spec.mu;
  row.kappa = spec.kappa;
  row.trial = spec.trial;
  const LedgerTotals before = gateway.ledger().totals();
  try {
    Partition partition = build_partition(subpool, spec.normalizer);
    AnswerKey chosen;
    const MethodSpec& ms = spec.method;
    if (ms.name == "pass1") {
      chosen = pass_at_1(partition, rng);
    } else if (ms.name == "sc") {
      chosen = majority_vote(partition);
    } else if (ms.name == "bon") {
      chosen = best_of_n(partition,
                         detail::build_field(ms.field, spec.question, partition, gateway, spec));
    } else if (ms.name == "wsc") {
      chosen = weighted_vote(partition,
                             detail::build_field(FieldSource::judge, spec.question, partition,
                                                 gateway, spec));
    } else if (ms.name == "self_certainty") {
      chosen = self_certainty_vote(partition, spec.self_certainty_q);
    } else if (ms.name == "deepconf") {
      chosen = deepconf_vote(partition, spec.deepconf_window);
    } else if (ms.name == "kt") {
      KnockoutConfig kcfg;
      kcfg.comparison_budget = detail::derived_kt_budget(spec, partition.n());
      KnockoutResult kt = knockout_tournament(spec.question, partition, gateway, kcfg, rng);
      chosen = kt.winner;
    } else if (ms.name == "jc") {
      AggregationConfig cfg;
      cfg.mu = spec.mu;
      cfg.mode = ms.jc_mode;
      cfg.kappa = spec.kappa;
      cfg.tau = spec.tau;
      FieldVector h = (ms.jc_mode == SolveMode::J_only)
                          ? uniform_field(partition.n())
                          : detail::build_field(ms.field, spec.question, partition, gateway, spec);
      EnergyReport report;
      const bool exact = ms.jc_mode == SolveMode::exact_J ||
                         (ms.jc_mode == SolveMode::J_only && ms.exact_interaction_for_j_only);
      if (ms.jc_mode == SolveMode::h_only) {
        report = solve(partition, h, cfg);
      } else if (exact) {
        PreferenceMatrix p = build_preference_matrix(spec.question, partition.pool, gateway,
                                                     false, spec.threads);
        InteractionExact inter = build_interaction_exact(p, partition, spec.tau);
        report = solve(partition, h, inter, cfg);
      } else {
        BetaMatrix beta = estimate_beta(spec.question, partition, spec.kappa, spec.m, gateway,
                                        rng, DiagonalPolicy::convention_half, spec.threads);
        report = solve(partition, h, beta, cfg);
      }
      chosen = AnswerKey{report.chosen_answer};
    } else {
      throw Error("unknown method: " + ms.name);
    }
    row.chosen = chosen.key;
    for (std::size_t g = 0; g < partition.k(); ++g) {
      if (partition.groups[g].answer == chosen) {
        row.correct = detail::group_correctness(partition, g);
        break;
      }
    }
  } catch (const Error& e) {
    row.status = std::string("error: ") + e.what();
  }
  const LedgerTotals delta = gateway.ledger().totals() - before;
  row.judge_calls = delta.calls;
  row.input_tokens = delta.input_tokens;
  row.output_tokens = delta.output_tokens;
  row.cost_nanousd = delta.cost_nanousd;
  return row;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trial_stream_label(const TrialSpec& s) {
  std::ostringstream os;
  os << s.question_id << '\x1f' << s.method.label() << '\x1f' << s.n << '\x1f'
     << format_double(s.mu) << '\x1f' << s.kappa << '\x1f' << s.trial;
  return os.str();
}

inline std::string dataset_name(const PoolSpec& spec) {
  if (!spec.dataset.empty()) return spec.dataset;
  return std::filesystem::path(spec.path).stem().string();
}

inline std::string default_sidecar(const PoolSpec& spec) {
  if (!spec.sidecar.empty()) return spec.sidecar;
  return spec.path + ".sidecar.json";
}

}  // namespace detail

/// Builds the judge gateway for one pool. The cache and ledger are shared
/// across the whole sweep; sim backends are per-pool because they replay the
/// pool's own ground truth.
inline JudgeGateway make_gateway(const JudgeSetup& setup, const PoolSpec& pool,
                                 const std::shared_ptr<JudgeCache>& cache,
                                 const std::shared_ptr<CostLedger>& ledger) {
  auto backend = detail::make_backend(setup.backend, setup.fixture_path,
                                      detail::default_sidecar(pool), setup.endpoint,
                                      setup.url_path, setup.model, setup.api_key_env,
                                      setup.auth_header, setup.cfg);
  return JudgeGateway(std::move(backend), setup.cfg, cache, ledger);
}

struct SweepOutput {
  ResultTable table;
  LedgerTotals ledger_totals;
  LedgerTotals field_totals;
  LedgerTotals interaction_totals;
  LedgerTotals baseline_totals;
};

inline SweepOutput run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  auto cache = cfg.judge.cache_path.empty() ? std::make_shared<JudgeCache>()
                                            : std::make_shared<JudgeCache>(cfg.judge.cache_path);
  auto ledger = std::make_shared<CostLedger>();
  if (!cfg.judge.ledger_sink.empty()) ledger->attach_sink(cfg.judge.ledger_sink);

  SweepOutput out;
  for (const PoolSpec& pool_spec : cfg.pools) {
    const std::vector<Trace> pool = read_pool_file(pool_spec.path);
    if (pool.empty()) throw Error("empty pool: " + pool_spec.path);
    const std::string dataset = detail::dataset_name(pool_spec);
    const std::string question_id = pool.front().question_id;
    const std::string question = pool_spec.question.empty() ? question_id : pool_spec.question;
    JudgeGateway gateway = make_gateway(cfg.judge, pool_spec, cache, ledger);

    std::vector<std::size_t> n_grid = cfg.n_grid;
    if (n_grid.empty()) n_grid.push_back(pool.size());

    for (const MethodSpec& method : cfg.methods) {
      for (std::size_t n : n_grid) {
        for (double mu : cfg.mu_grid) {
          for (std::size_t kappa : cfg.kappa_grid) {
            for (int trial = 0; trial < cfg.trials; ++trial) {
              TrialSpec spec;
              spec.dataset = dataset;
              spec.question_id = question_id;
              spec.question = question;
              spec.method = method;
              spec.n = n;
              spec.mu = mu;
              spec.kappa = kappa;
              spec.m = cfg.m;
              spec.trial = static_cast<std::size_t>(trial);
              spec.tau = cfg.tau;
              spec.self_certainty_q = cfg.self_certainty_q;
              spec.deepconf_window = cfg.deepconf_window;
              spec.kt_budget = cfg.kt_budget;
              spec.normalizer = cfg.normalizer;
              spec.threads = cfg.threads;
              Rng rng = Rng::derive(cfg.seed, detail::trial_stream_label(spec));
              ResultRow row;
              if (n > pool.size()) {
                row.dataset = dataset;
                row.question_id = question_id;
                row.method = method.label();
                row.n = n;
                row.mu = mu;
                row.kappa = kappa;
                row.trial = spec.trial;
                row.status = "error: subsample larger than pool";
              } else {
                const std::vector<Trace> sub = subsample(pool, n, rng);
                row = run_trial(sub, spec, gateway, rng);
              }
              out.table.rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  out.table.sort_rows();
  out.table.recompute_aggregates();
  out.ledger_totals = ledger->totals();
  out.field_totals = ledger->totals(CostCategory::field);
  out.interaction_totals = ledger->totals(CostCategory::interaction);
  out.baseline_totals = ledger->totals(CostCategory::baseline);
  return out;
}

/// Writes results.csv, aggregates.csv, results.json, results.txt, and
/// pareto.csv under cfg.out_dir.
inline void write_sweep_outputs(const ExperimentConfig& cfg, const SweepOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  auto dump = [&](const std::string& name, const std::string& content) {
    std::ofstream f(fs::path(cfg.out_dir) / name);
    if (!f) throw Error("cannot write " + name + " under " + cfg.out_dir);
    f << content;
  };
  dump("results.csv", out.table.rows_csv());
  dump("aggregates.csv", out.table.aggregates_csv());
  dump("pareto.csv", out.table.pareto_csv());
  dump("results.txt", out.table.text_table());
  nlohmann::json j = out.table.to_json();
  j["ledger"] = {{"calls", out.ledger_totals.calls},
                 {"input_tokens", out.ledger_totals.input_tokens},
                 {"output_tokens", out.ledger_totals.output_tokens},
                 {"cost_usd", out.ledger_totals.cost_usd()},
                 {"field_calls", out.field_totals.calls},
                 {"interaction_calls", out.interaction_totals.calls},
                 {"baseline_calls", out.baseline_totals.calls}};
  dump("results.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Config I/O
// ---------------------------------------------------------------------------

inline MethodSpec method_from_json(const nlohmann::json& j) {
  if (j.is_string()) return MethodSpec::parse(j.get<std::string>());
  MethodSpec m = MethodSpec::parse(j.at("name").get<std::string>());
  if (j.contains("mode")) {
    auto mode = solve_mode_from_string(j["mode"].get<std::string>());
    if (!mode) throw Error("bad jc mode: " + j["mode"].get<std::string>());
    m.jc_mode = *mode;
  }
  if (j.contains("field")) {
    const std::string f = j["field"].get<std::string>();
    if (f == "uniform") m.field = FieldSource::uniform;
    else if (f == "judge") m.field = FieldSource::judge;
    else if (f == "self_certainty") m.field = FieldSource::self_certainty;
    else if (f == "deepconf") m.field = FieldSource::deepconf;
    else throw Error("bad field source: " + f);
  }
  return m;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("pools")) {
    for (const auto& p : j["pools"]) {
      PoolSpec spec;
      if (p.is_string()) {
        spec.path = p.get<std::string>();
      } else {
        spec.path = p.at("path").get<std::string>();
        spec.sidecar = p.value("sidecar", "");
        spec.question = p.value("question", "");
        spec.dataset = p.value("dataset", "");
      }
      cfg.pools.push_back(std::move(spec));
    }
  }
  if (j.contains("methods"))
    for (const auto& m : j["methods"]) cfg.methods.push_back(method_from_json(m));
  if (j.contains("N_grid")) cfg.n_grid = j["N_grid"].get<std::vector<std::size_t>>();
  if (j.contains("mu_grid")) cfg.mu_grid = j["mu_grid"].get<std::vector<double>>();
  if (j.contains("kappa_grid")) cfg.kappa_grid = j["kappa_grid"].get<std::vector<std::size_t>>();
  cfg.m = j.value("m", cfg.m);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.self_certainty_q = j.value("self_certainty_q", cfg.self_certainty_q);
  cfg.deepconf_window = j.value("deepconf_window", cfg.deepconf_window);
  cfg.kt_budget = j.value("kt_budget", cfg.kt_budget);
  if (j.value("normalizer", "exact") == "math") cfg.normalizer = Normalizer::math;
  if (j.contains("judge")) {
    const auto& jj = j["judge"];
    cfg.judge.backend = jj.value("backend", cfg.judge.backend);
    cfg.judge.fixture_path = jj.value("fixture", cfg.judge.fixture_path);
    cfg.judge.endpoint = jj.value("endpoint", cfg.judge.endpoint);
    cfg.judge.url_path = jj.value("path", cfg.judge.url_path);
    cfg.judge.model = jj.value("model", cfg.judge.model);
    cfg.judge.api_key_env = jj.value("api_key_env", cfg.judge.api_key_env);
    cfg.judge.auth_header = jj.value("auth_header", cfg.judge.auth_header);
    cfg.judge.cache_path = jj.value("cache", cfg.judge.cache_path);
    cfg.judge.ledger_sink = jj.value("ledger", cfg.judge.ledger_sink);
    cfg.judge.cfg.replicates = jj.value("replicates", cfg.judge.cfg.replicates);
    cfg.judge.cfg.retry_limit = jj.value("retry_limit", cfg.judge.cfg.retry_limit);
    cfg.judge.cfg.temperature = jj.value("temperature", cfg.judge.cfg.temperature);
    cfg.judge.cfg.reasoning_effort =
        jj.value("reasoning_effort", cfg.judge.cfg.reasoning_effort);
    cfg.judge.cfg.price_per_million_input =
        jj.value("price_per_million_input", cfg.judge.cfg.price_per_million_input);
    cfg.judge.cfg.price_per_million_output =
        jj.value("price_per_million_output", cfg.judge.cfg.price_per_million_output);
    cfg.judge.cfg.symmetrize_pairwise =
        jj.value("symmetrize_pairwise", cfg.judge.cfg.symmetrize_pairwise);
    if (jj.value("task", "math") == "code") cfg.judge.cfg.task = TaskKind::code;
  }
  return cfg;
}

inline ExperimentConfig experiment_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return experiment_from_json(j);
}

}  // namespace jc
