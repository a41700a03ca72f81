// Command-line front end: aggregate one pool, run sweeps, synthesize pools,
// and maintain the judge cache / cost ledgers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jc/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

jc::SimConfig sim_config_from_json(const json& j) {
  jc::SimConfig cfg;
  cfg.K = j.at("K").get<std::size_t>();
  cfg.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
  cfg.quality = j.at("quality").get<std::vector<double>>();
  cfg.correct_index = j.value("correct_index", 0);
  if (j.value("link", "logistic") == "linear_clamped") cfg.link = jc::SimLink::linear_clamped;
  cfg.noise_sigma = j.value("noise_sigma", 0.0);
  cfg.score_mean_correct = j.value("score_mean_correct", cfg.score_mean_correct);
  cfg.score_mean_incorrect = j.value("score_mean_incorrect", cfg.score_mean_incorrect);
  cfg.score_spread = j.value("score_spread", cfg.score_spread);
  cfg.seed = j.value("seed", 0);
  cfg.question_id = j.value("question_id", cfg.question_id);
  return cfg;
}

struct JudgeFlags {
  std::string backend = "scripted";
  std::string fixture;
  std::string sidecar;
  std::string endpoint;
  std::string url_path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "JC_JUDGE_API_KEY";
  std::string cache;
  std::string ledger;
  int replicates = 1;
  int retry_limit = 3;
  double temperature = 1.0;
  std::string reasoning_effort;
  double price_in = 0.0;
  double price_out = 0.0;
  bool symmetrize = false;
  std::string task = "math";

  void attach(CLI::App* cmd) {
    cmd->add_option("--judge", backend, "judge backend: scripted | sim | http")
        ->check(CLI::IsMember({"scripted", "sim", "http"}));
    cmd->add_option("--fixture", fixture, "scripted-judge reply table (JSON)");
    cmd->add_option("--sidecar", sidecar, "sim-judge ground truth (defaults to <pool>.sidecar.json)");
    cmd->add_option("--endpoint", endpoint, "http judge base URL");
    cmd->add_option("--url-path", url_path, "http judge request path");
    cmd->add_option("--model", model, "http judge model name");
    cmd->add_option("--api-key-env", api_key_env, "environment variable holding the judge credential");
    cmd->add_option("--cache", cache, "persistent judge cache (JSONL, append-only)");
    cmd->add_option("--ledger", ledger, "per-call cost ledger sink (JSONL)");
    cmd->add_option("--replicates", replicates, "judge samples per query");
    cmd->add_option("--retry-limit", retry_limit, "resamples after a parse failure");
    cmd->add_option("--temperature", temperature, "judge sampling temperature");
    cmd->add_option("--reasoning-effort", reasoning_effort, "reasoning-effort passthrough");
    cmd->add_option("--price-in", price_in, "judge $ per million input tokens");
    cmd->add_option("--price-out", price_out, "judge $ per million output tokens");
    cmd->add_flag("--symmetrize", symmetrize, "average both pairwise directions");
    cmd->add_option("--task", task, "prompt family: math | code")
        ->check(CLI::IsMember({"math", "code"}));
  }

  jc::JudgeSetup to_setup(const std::string& pool_path) const {
    jc::JudgeSetup setup;
    setup.backend = backend;
    setup.fixture_path = fixture;
    setup.endpoint = endpoint;
    setup.url_path = url_path;
    setup.model = model;
    setup.api_key_env = api_key_env;
    setup.cache_path = cache;
    setup.ledger_sink = ledger;
    setup.cfg.backend_id = backend;
    setup.cfg.replicates = replicates;
    setup.cfg.retry_limit = retry_limit;
    setup.cfg.temperature = temperature;
    setup.cfg.reasoning_effort = reasoning_effort;
    setup.cfg.price_per_million_input = price_in;
    setup.cfg.price_per_million_output = price_out;
    setup.cfg.symmetrize_pairwise = symmetrize;
    setup.cfg.task = task == "code" ? jc::TaskKind::code : jc::TaskKind::math;
    (void)pool_path;
    return setup;
  }
};

int cmd_aggregate(const std::string& pool_path, const std::string& question_flag,
                  const std::string& method_name, double mu, std::size_t kappa, int m,
                  double tau, const std::string& field_name, const std::string& normalizer_name,
                  std::uint64_t seed, int threads, std::size_t kt_budget, double field_q,
                  std::size_t field_window, bool explain, const std::string& dump_matrix,
                  const JudgeFlags& judge) {
  const std::vector<jc::Trace> pool = jc::read_pool_file(pool_path);
  if (pool.empty()) throw jc::Error("pool is empty: " + pool_path);
  const std::string question = question_flag.empty() ? pool.front().question_id : question_flag;

  jc::PoolSpec pool_spec;
  pool_spec.path = pool_path;
  pool_spec.sidecar = judge.sidecar;
  auto cache = judge.cache.empty() ? std::make_shared<jc::JudgeCache>()
                                   : std::make_shared<jc::JudgeCache>(judge.cache);
  auto ledger = std::make_shared<jc::CostLedger>();
  if (!judge.ledger.empty()) ledger->attach_sink(judge.ledger);
  jc::JudgeGateway gateway = jc::make_gateway(judge.to_setup(pool_path), pool_spec, cache, ledger);

  jc::TrialSpec spec;
  spec.dataset = fs::path(pool_path).stem().string();
  spec.question_id = pool.front().question_id;
  spec.question = question;
  spec.method = jc::MethodSpec::parse(method_name);
  if (field_name == "uniform") spec.method.field = jc::FieldSource::uniform;
  else if (field_name == "judge") spec.method.field = jc::FieldSource::judge;
  else if (field_name == "self_certainty") spec.method.field = jc::FieldSource::self_certainty;
  else if (field_name == "deepconf") spec.method.field = jc::FieldSource::deepconf;
  spec.n = pool.size();
  spec.mu = mu;
  spec.kappa = kappa;
  spec.m = m;
  spec.tau = tau;
  spec.kt_budget = kt_budget;
  spec.normalizer = normalizer_name == "math" ? jc::Normalizer::math : jc::Normalizer::exact;
  spec.threads = threads;
  spec.self_certainty_q = field_q;
  spec.deepconf_window = field_window;

  // JC methods get the full energy report; everything else prints the answer.
  jc::Partition partition = jc::build_partition(pool, spec.normalizer);
  jc::Rng rng(seed);
  if (spec.method.name == "jc") {
    const jc::LedgerTotals before = ledger->totals();
    jc::AggregationConfig cfg;
    cfg.mu = mu;
    cfg.mode = spec.method.jc_mode;
    cfg.kappa = kappa;
    cfg.tau = tau;
    jc::FieldVector h =
        (cfg.mode == jc::SolveMode::J_only)
            ? jc::uniform_field(partition.n())
            : [&] {
                switch (spec.method.field) {
                  case jc::FieldSource::uniform: return jc::uniform_field(partition.n());
                  case jc::FieldSource::judge:
                    return jc::judge_field(question, partition.pool, gateway, threads).field;
                  case jc::FieldSource::self_certainty:
                    return jc::self_certainty_field(partition.pool, field_q);
                  case jc::FieldSource::deepconf:
                    return jc::deepconf_tail_field(partition.pool, field_window);
                }
                return jc::uniform_field(partition.n());
              }();
    jc::EnergyReport report;
    const bool exact =
        cfg.mode == jc::SolveMode::exact_J ||
        (cfg.mode == jc::SolveMode::J_only && spec.method.exact_interaction_for_j_only);
    if (cfg.mode == jc::SolveMode::h_only) {
      report = jc::solve(partition, h, cfg);
    } else if (exact) {
      const jc::PreferenceMatrix p =
          jc::build_preference_matrix(question, partition.pool, gateway, false, threads);
      const jc::InteractionExact inter = jc::build_interaction_exact(p, partition, tau);
      if (!dump_matrix.empty()) {
        std::ofstream out(dump_matrix);
        out << jc::interaction_to_json(inter, partition).dump(2) << "\n";
      }
      report = jc::solve(partition, h, inter, cfg);
    } else {
      const jc::BetaMatrix beta =
          jc::estimate_beta(question, partition, kappa, m, gateway, rng,
                            jc::DiagonalPolicy::convention_half, threads);
      if (!dump_matrix.empty()) {
        std::ofstream out(dump_matrix);
        out << jc::beta_to_json(beta, partition).dump(2) << "\n";
      }
      report = jc::solve(partition, h, beta, cfg);
    }
    report.budget = ledger->totals() - before;
    if (explain)
      std::cout << report.to_json().dump(2) << "\n";
    else
      std::cout << report.chosen_answer << "\n";
    return 0;
  }

  if (spec.method.name == "kt" && explain) {
    jc::KnockoutConfig kcfg;
    kcfg.comparison_budget =
        kt_budget > 0 ? kt_budget
                      : (kappa >= 2 ? static_cast<std::size_t>(m) * kappa * (kappa - 1)
                                    : std::max<std::size_t>(1, partition.n() - 1));
    const jc::KnockoutResult kt =
        jc::knockout_tournament(question, partition, gateway, kcfg, rng);
    json j;
    j["winner"] = kt.winner.key;
    j["comparisons_used"] = kt.comparisons_used;
    j["budget_exhausted"] = kt.budget_exhausted;
    j["matches"] = json::array();
    for (const jc::KnockoutMatch& mt : kt.matches)
      j["matches"].push_back({{"round", mt.round},
                              {"first", partition.pool[mt.first].trace_id},
                              {"second", partition.pool[mt.second].trace_id},
                              {"same_answer", mt.same_answer},
                              {"score", mt.score},
                              {"winner", partition.pool[mt.winner].trace_id}});
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  const jc::ResultRow row = jc::run_trial(pool, spec, gateway, rng);
  if (row.status != "ok") {
    std::cerr << row.status << "\n";
    return 1;
  }
  std::cout << row.chosen << "\n";
  return 0;
}

struct SweepOverrides {
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, threads, m;
  std::optional<double> tau;
  std::optional<std::size_t> kt_budget;
  std::vector<double> mu_grid;
  std::vector<std::size_t> n_grid, kappa_grid;
  std::vector<std::string> methods;
  std::string cache, ledger;
};

int cmd_sweep(const std::string& config_path, const SweepOverrides& ov) {
  jc::ExperimentConfig cfg = jc::experiment_from_file(config_path);
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.trials) cfg.trials = *ov.trials;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.m) cfg.m = *ov.m;
  if (ov.tau) cfg.tau = *ov.tau;
  if (ov.kt_budget) cfg.kt_budget = *ov.kt_budget;
  if (!ov.mu_grid.empty()) cfg.mu_grid = ov.mu_grid;
  if (!ov.n_grid.empty()) cfg.n_grid = ov.n_grid;
  if (!ov.kappa_grid.empty()) cfg.kappa_grid = ov.kappa_grid;
  if (!ov.methods.empty()) {
    cfg.methods.clear();
    for (const std::string& ms : ov.methods) cfg.methods.push_back(jc::MethodSpec::parse(ms));
  }
  if (!ov.cache.empty()) cfg.judge.cache_path = ov.cache;
  if (!ov.ledger.empty()) cfg.judge.ledger_sink = ov.ledger;
  const jc::SweepOutput out = jc::run_sweep(cfg);
  jc::write_sweep_outputs(cfg, out);
  std::cout << out.table.text_table();
  std::printf("judge calls: %lld (field %lld, interaction %lld, baseline %lld), cost $%.6f\n",
              out.ledger_totals.calls, out.field_totals.calls, out.interaction_totals.calls,
              out.baseline_totals.calls, out.ledger_totals.cost_usd());
  std::printf("wrote results under %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_simulate(const std::string& out_path, const std::string& config_path,
                 const std::string& preset, std::uint64_t seed, double noise, int count) {
  std::vector<std::pair<std::string, jc::SimPool>> pools;
  for (int i = 0; i < count; ++i) {
    jc::SimConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw jc::Error("cannot open sim config: " + config_path);
      json j;
      in >> j;
      cfg = sim_config_from_json(j);
      cfg.seed += static_cast<std::uint64_t>(i);
    } else if (preset == "preference_dominant") {
      cfg = jc::preference_dominant_preset(seed + static_cast<std::uint64_t>(i), noise);
    } else {
      throw jc::Error("need --config or --preset");
    }
    if (count > 1) cfg.question_id += "-" + std::to_string(i);
    std::string path = out_path;
    if (count > 1) {
      const fs::path p(out_path);
      char idx[16];
      std::snprintf(idx, sizeof(idx), "_%03d", i);
      path = (p.parent_path() / (p.stem().string() + idx + p.extension().string())).string();
    }
    pools.emplace_back(path, jc::gen_pool(cfg));
  }
  for (const auto& [path, pool] : pools) {
    jc::write_pool_file(path, pool.traces);
    jc::write_sim_sidecar(path + ".sidecar.json", pool);
    std::printf("wrote %s (+ sidecar), N=%zu, K=%zu\n", path.c_str(), pool.traces.size(),
                pool.ground_beta.k());
  }
  return 0;
}

int cmd_cache_compact(const std::string& file) {
  const auto [lines, kept] = jc::JudgeCache::compact_file(file);
  std::printf("%s: %zu lines -> %zu records\n", file.c_str(), lines, kept);
  return 0;
}

int cmd_cost_report(const std::string& ledger_path, const std::string& cache_path) {
  if (!ledger_path.empty()) {
    std::ifstream in(ledger_path);
    if (!in) throw jc::Error("cannot open ledger: " + ledger_path);
    std::map<std::string, jc::LedgerTotals> per_cat;
    long long pairwise_calls = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      jc::LedgerTotals& t = per_cat[j.value("category", "?")];
      t.calls += 1;
      t.input_tokens += j.value("input_tokens", 0LL);
      t.output_tokens += j.value("output_tokens", 0LL);
      t.cost_nanousd += static_cast<long long>(std::llround(j.value("cost_usd", 0.0) * 1e9));
      const std::string kind = j.value("kind", "");
      if (kind == "pairwise_math" || kind == "pairwise_code") ++pairwise_calls;
    }
    jc::LedgerTotals total;
    std::printf("%-12s %10s %14s %14s %12s\n", "category", "calls", "input_tokens",
                "output_tokens", "cost_usd");
    for (const auto& [cat, t] : per_cat) {
      std::printf("%-12s %10lld %14lld %14lld %12.6f\n", cat.c_str(), t.calls, t.input_tokens,
                  t.output_tokens, t.cost_usd());
      total += t;
    }
    std::printf("%-12s %10lld %14lld %14lld %12.6f\n", "total", total.calls, total.input_tokens,
                total.output_tokens, total.cost_usd());
    std::printf("pairwise comparisons: %lld ordered (%lld unordered pairs if both directions "
                "were queried)\n",
                pairwise_calls, pairwise_calls / 2);
  }
  if (!cache_path.empty()) {
    std::ifstream in(cache_path);
    if (!in) throw jc::Error("cannot open cache: " + cache_path);
    long long records = 0, in_tok = 0, out_tok = 0, nano = 0, failures = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const jc::JudgeRecord r = jc::record_from_json(json::parse(line));
      ++records;
      in_tok += r.input_tokens;
      out_tok += r.output_tokens;
      nano += r.cost_nanousd;
      if (!r.parsed_score) ++failures;
    }
    std::printf("cache %s: %lld records (%lld parse failures), %lld input tokens, %lld output "
                "tokens, $%.6f\n",
                cache_path.c_str(), records, failures, in_tok, out_tok,
                static_cast<double>(nano) / 1e9);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint-consistency test-time aggregation"};
  app.require_subcommand(1);

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "aggregate one trace pool with one method");
  std::string pool_path, question, method = "jc_answer_level", field = "judge";
  std::string normalizer = "exact", dump_matrix;
  double mu = 0.5, tau = 1.0;
  std::size_t kappa = 4, kt_budget = 0, field_window = 2048;
  double field_q = 2.0;
  int m = 1, threads = 1;
  std::uint64_t seed = 0;
  bool explain = false;
  JudgeFlags agg_judge;
  agg->add_option("--pool", pool_path, "trace pool (JSONL)")->required();
  agg->add_option("--question", question, "question text (defaults to the pool's question_id)");
  agg->add_option("--method", method,
                  "pass1 | bon | sc | wsc | self_certainty | deepconf | kt | jc_exact | "
                  "jc_answer_level | jc_h_only | jc_j_only | jc_j_only_exact");
  agg->add_option("--mu", mu, "weight of the independent-evaluation term");
  agg->add_option("--kappa", kappa, "answer-level candidate budget");
  agg->add_option("--m", m, "trace pairs sampled per ordered group pair");
  agg->add_option("--tau", tau, "preference power in the interaction construction");
  agg->add_option("--field", field, "uniform | judge | self_certainty | deepconf");
  agg->add_option("--normalizer", normalizer, "answer normalizer: exact | math");
  agg->add_option("--seed", seed, "RNG seed");
  agg->add_option("--threads", threads, "concurrent judge requests");
  agg->add_option("--kt-budget", kt_budget, "knockout comparison budget (0 = derived)");
  agg->add_option("--q", field_q, "rank power for the self-certainty field");
  agg->add_option("--window", field_window, "tail window for the confidence field");
  agg->add_flag("--explain", explain, "print the full energy report (JSON)");
  agg->add_option("--dump-matrix", dump_matrix, "write the interaction matrix (JSON)");
  agg_judge.attach(agg);

  // sweep
  auto* swp = app.add_subcommand("sweep", "run a configured experiment sweep");
  std::string sweep_config;
  SweepOverrides ov;
  swp->add_option("--config", sweep_config, "experiment config (JSON)")->required();
  swp->add_option("--out", ov.out_dir, "output directory override");
  swp->add_option("--seed", ov.seed, "seed override");
  swp->add_option("--trials", ov.trials, "trials override");
  swp->add_option("--threads", ov.threads, "threads override");
  swp->add_option("--m", ov.m, "samples per group pair override");
  swp->add_option("--tau", ov.tau, "preference power override");
  swp->add_option("--kt-budget", ov.kt_budget, "knockout budget override");
  swp->add_option("--mu-grid", ov.mu_grid, "mu grid override");
  swp->add_option("--n-grid", ov.n_grid, "N grid override");
  swp->add_option("--kappa-grid", ov.kappa_grid, "kappa grid override");
  swp->add_option("--methods", ov.methods, "methods override");
  swp->add_option("--cache", ov.cache, "judge cache override");
  swp->add_option("--ledger", ov.ledger, "ledger sink override");

  // simulate
  auto* sim = app.add_subcommand("simulate", "synthesize labeled pools with ground truth");
  std::string sim_out, sim_config, sim_preset = "preference_dominant";
  std::uint64_t sim_seed = 0;
  double sim_noise = 0.0;
  int sim_count = 1;
  sim->add_option("--out", sim_out, "output pool path (JSONL)")->required();
  sim->add_option("--config", sim_config, "full sim config (JSON)");
  sim->add_option("--preset", sim_preset, "preset: preference_dominant");
  sim->add_option("--seed", sim_seed, "base seed");
  sim->add_option("--noise", sim_noise, "trace-level preference noise sigma");
  sim->add_option("--count", sim_count, "number of pools to generate");

  // cache compact
  auto* cache_cmd = app.add_subcommand("cache", "judge cache maintenance");
  auto* compact = cache_cmd->add_subcommand("compact", "dedupe a cache file by record id");
  std::string compact_file;
  compact->add_option("--file", compact_file, "cache file (JSONL)")->required();

  // cost report
  auto* cost_cmd = app.add_subcommand("cost", "cost accounting");
  auto* report = cost_cmd->add_subcommand("report", "summarize ledger and cache files");
  std::string report_ledger, report_cache;
  report->add_option("--ledger", report_ledger, "ledger sink (JSONL)");
  report->add_option("--cache", report_cache, "judge cache (JSONL)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*agg)
      return cmd_aggregate(pool_path, question, method, mu, kappa, m, tau, field, normalizer,
                           seed, threads, kt_budget, field_q, field_window, explain,
                           dump_matrix, agg_judge);
    if (*swp) return cmd_sweep(sweep_config, ov);
    if (*sim) return cmd_simulate(sim_out, sim_config, sim_preset, sim_seed, sim_noise, sim_count);
    if (*compact) return cmd_cache_compact(compact_file);
    if (*report) return cmd_cost_report(report_ledger, report_cache);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 1;
}
