#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jc/errors.hpp"
#include "jc/prompts.hpp"
#include "jc/rng.hpp"
#include "jc/trace.hpp"

namespace jc {

// ---------------------------------------------------------------------------
// Score parsing
// ---------------------------------------------------------------------------

/// Extracts the last decimal literal in [0,1] from a judge reply. Markdown
/// and surrounding prose are ignored because only maximal numeric tokens are
/// considered. Returns nullopt when no in-range literal exists.
inline std::optional<double> try_parse_score(std::string_view raw) {
  std::optional<double> best;
  std::size_t i = 0;
  auto digit = [&](std::size_t k) {
    return k < raw.size() && std::isdigit(static_cast<unsigned char>(raw[k]));
  };
  while (i < raw.size()) {
    const char c = raw[i];
    const bool sign_start = (c == '-' || c == '+') && (digit(i + 1) || (i + 1 < raw.size() && raw[i + 1] == '.' && digit(i + 2)));
    const bool num_start = digit(i) || (c == '.' && digit(i + 1)) || sign_start;
    if (!num_start) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (raw[j] == '-' || raw[j] == '+') ++j;
    while (digit(j)) ++j;
    if (j < raw.size() && raw[j] == '.') {
      ++j;
      while (digit(j)) ++j;
    }
    const std::string token(raw.substr(i, j - i));
    const double v = std::strtod(token.c_str(), nullptr);
    if (v >= 0.0 && v <= 1.0 && token != "-" && token != "+") best = v;
    i = j;
  }
  return best;
}

inline double parse_score(std::string_view raw) {
  auto v = try_parse_score(raw);
  if (!v) throw ParseFailure("no score literal in [0,1]: \"" + std::string(raw) + "\"");
  return *v;
}

// ---------------------------------------------------------------------------
// Judge records and cache
// ---------------------------------------------------------------------------

/// One judge interaction: the unit of caching, cost metering, and replay.
struct JudgeRecord {
  std::string record_id;  // content hash of (backend_id, prompt bundle, replicate index)
  PromptKind kind = PromptKind::independent_math;
  std::string raw_output;
  std::optional<double> parsed_score;  // nullopt marks a parse failure
  long long input_tokens = 0;
  long long output_tokens = 0;
  long long cost_nanousd = 0;
  std::string timestamp;

  double cost_usd() const { return static_cast<double>(cost_nanousd) / 1e9; }

  friend bool operator==(const JudgeRecord& a, const JudgeRecord& b) {
    return a.record_id == b.record_id && a.kind == b.kind && a.raw_output == b.raw_output &&
           a.parsed_score == b.parsed_score && a.input_tokens == b.input_tokens &&
           a.output_tokens == b.output_tokens && a.cost_nanousd == b.cost_nanousd &&
           a.timestamp == b.timestamp;
  }
};

/// Pure function of the query identity; two structurally identical queries
/// always share a record id, which is what makes replay deterministic.
inline std::string record_id_for(std::string_view backend_id, const PromptBundle& bundle,
                                 int replicate_index) {
  std::string data;
  data += backend_id;
  data += '\x1f';
  data += to_string(bundle.kind);
  data += '\x1f';
  for (const ChatMessage& m : bundle.messages) {
    data += m.role;
    data += '\x1e';
    data += m.text;
    data += '\x1e';
  }
  data += '\x1f';
  data += std::to_string(replicate_index);
  const std::uint64_t lo = fnv1a64(data);
  const std::uint64_t hi = fnv1a64(data, 0x9e3779b97f4a7c15ULL);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return std::string(buf);
}

inline nlohmann::json record_to_json(const JudgeRecord& r) {
  nlohmann::json j;
  j["record_id"] = r.record_id;
  j["kind"] = to_string(r.kind);
  j["raw_output"] = r.raw_output;
  if (r.parsed_score)
    j["parsed_score"] = *r.parsed_score;
  else
    j["parsed_score"] = nullptr;
  j["input_tokens"] = r.input_tokens;
  j["output_tokens"] = r.output_tokens;
  j["cost_usd"] = r.cost_usd();
  j["timestamp"] = r.timestamp;
  return j;
}

inline JudgeRecord record_from_json(const nlohmann::json& j) {
  JudgeRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  const std::string kind = j.value("kind", "independent_math");
  if (kind == "pairwise_math") r.kind = PromptKind::pairwise_math;
  else if (kind == "independent_code") r.kind = PromptKind::independent_code;
  else if (kind == "pairwise_code") r.kind = PromptKind::pairwise_code;
  else r.kind = PromptKind::independent_math;
  if (j.contains("parsed_score") && !j["parsed_score"].is_null())
    r.parsed_score = j["parsed_score"].get<double>();
  r.raw_output = j.value("raw_output", "");
  r.input_tokens = j.value("input_tokens", 0LL);
  r.output_tokens = j.value("output_tokens", 0LL);
  r.cost_nanousd = std::llround(j.value("cost_usd", 0.0) * 1e9);
  r.timestamp = j.value("timestamp", "");
  return r;
}

/// Append-only judge response store. Safe for concurrent lookup/insert;
/// identical record ids carry value-identical records, so last-writer-wins
/// is harmless. When a backing file is attached, every insert is appended
/// as one JSON line and the full file is loaded at construction.
class JudgeCache {
 public:
  JudgeCache() = default;

  explicit JudgeCache(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (in) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          JudgeRecord r = record_from_json(nlohmann::json::parse(line));
          map_[r.record_id] = std::move(r);
        } catch (const nlohmann::json::exception&) {
          // a torn final line from an interrupted run is recoverable;
          // corruption earlier in the file is not
          if (in.peek() != std::char_traits<char>::eof())
            throw Error(path + ":" + std::to_string(lineno) + ": corrupt cache record");
        }
      }
    }
    out_.open(path, std::ios::app);
    if (!out_) throw Error("cannot open judge cache for append: " + path);
  }

  std::optional<JudgeRecord> lookup(const std::string& record_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(record_id);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const JudgeRecord& rec) {
    std::lock_guard<std::mutex> lock(mu_);
    map_[rec.record_id] = rec;
    if (out_.is_open()) {
      out_ << record_to_json(rec).dump() << "\n";
      out_.flush();
    }
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

  /// Rewrites a cache file with one line per record id (last write wins,
  /// first-seen order preserved). Returns (lines_read, records_kept).
  static std::pair<std::size_t, std::size_t> compact_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open judge cache: " + path);
    std::vector<std::string> order;
    std::unordered_map<std::string, JudgeRecord> latest;
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++lines;
      JudgeRecord r = record_from_json(nlohmann::json::parse(line));
      if (!latest.count(r.record_id)) order.push_back(r.record_id);
      latest[r.record_id] = std::move(r);
    }
    in.close();
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw Error("cannot write " + tmp);
      for (const std::string& id : order) out << record_to_json(latest[id]).dump() << "\n";
    }
    std::rename(tmp.c_str(), path.c_str());
    return {lines, order.size()};
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, JudgeRecord> map_;
  std::string path_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Cost ledger
// ---------------------------------------------------------------------------

/// Which evaluation signal a judge call was spent on. Mirrors how costs are
/// reported: independent scores (field), pairwise scores for the interaction
/// structure, and pairwise scores consumed by baseline aggregators.
enum class CostCategory { field, interaction, baseline };

inline const char* to_string(CostCategory c) {
  switch (c) {
    case CostCategory::field: return "field";
    case CostCategory::interaction: return "interaction";
    case CostCategory::baseline: return "baseline";
  }
  return "?";
}

/// Money is tracked in integer nanodollars so per-row deltas sum to the
/// grand total exactly.
struct LedgerTotals {
  long long calls = 0;  // live backend calls (cache hits excluded)
  long long input_tokens = 0;
  long long output_tokens = 0;
  long long cost_nanousd = 0;

  double cost_usd() const { return static_cast<double>(cost_nanousd) / 1e9; }

  LedgerTotals& operator+=(const LedgerTotals& o) {
    calls += o.calls;
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    cost_nanousd += o.cost_nanousd;
    return *this;
  }
  friend LedgerTotals operator-(LedgerTotals a, const LedgerTotals& b) {
    a.calls -= b.calls;
    a.input_tokens -= b.input_tokens;
    a.output_tokens -= b.output_tokens;
    a.cost_nanousd -= b.cost_nanousd;
    return a;
  }
  friend bool operator==(const LedgerTotals& a, const LedgerTotals& b) {
    return a.calls == b.calls && a.input_tokens == b.input_tokens &&
           a.output_tokens == b.output_tokens && a.cost_nanousd == b.cost_nanousd;
  }
};

/// Append-only concurrent cost accumulator, per signal category. Optionally
/// mirrors every live call to a JSONL sink for offline cost reports.
class CostLedger {
 public:
  CostLedger() = default;

  void attach_sink(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    sink_.open(path, std::ios::app);
    if (!sink_) throw Error("cannot open ledger sink: " + path);
  }

  void add_live(CostCategory cat, const JudgeRecord& rec) {
    std::lock_guard<std::mutex> lock(mu_);
    LedgerTotals& t = per_cat_[static_cast<int>(cat)];
    t.calls += 1;
    t.input_tokens += rec.input_tokens;
    t.output_tokens += rec.output_tokens;
    t.cost_nanousd += rec.cost_nanousd;
    if (sink_.is_open()) {
      nlohmann::json j;
      j["category"] = to_string(cat);
      j["record_id"] = rec.record_id;
      j["kind"] = to_string(rec.kind);
      j["input_tokens"] = rec.input_tokens;
      j["output_tokens"] = rec.output_tokens;
      j["cost_usd"] = rec.cost_usd();
      sink_ << j.dump() << "\n";
      sink_.flush();
    }
  }

  void note_cache_hit(CostCategory cat) {
    std::lock_guard<std::mutex> lock(mu_);
    cache_hits_[static_cast<int>(cat)] += 1;
  }

  LedgerTotals totals() const {
    std::lock_guard<std::mutex> lock(mu_);
    LedgerTotals t;
    for (const LedgerTotals& c : per_cat_) t += c;
    return t;
  }

  LedgerTotals totals(CostCategory cat) const {
    std::lock_guard<std::mutex> lock(mu_);
    return per_cat_[static_cast<int>(cat)];
  }

  long long cache_hits() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_hits_[0] + cache_hits_[1] + cache_hits_[2];
  }

 private:
  mutable std::mutex mu_;
  LedgerTotals per_cat_[3];
  long long cache_hits_[3] = {0, 0, 0};
  std::ofstream sink_;
};

/// (calls, input_tokens, output_tokens, cost) summed over all categories.
inline LedgerTotals ledger_totals(const CostLedger& ledger) { return ledger.totals(); }

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

/// Identity of a query for backends that key replies off trace ids instead
/// of the rendered text (scripted fixtures, the pool simulator).
struct QueryMeta {
  PromptKind kind = PromptKind::independent_math;
  std::string trace_a;  // the trace, or Response 1 for pairwise queries
  std::string trace_b;  // Response 2 for pairwise queries
};

struct BackendReply {
  std::string text;
  long long input_tokens = 0;
  long long output_tokens = 0;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string id() const = 0;
  /// Must be safe to call from multiple threads.
  virtual BackendReply complete(const PromptBundle& bundle, const QueryMeta& meta) = 0;
};

namespace detail {

inline long long approx_tokens(std::size_t chars) {
  return static_cast<long long>((chars + 3) / 4);
}

inline long long bundle_chars(const PromptBundle& b) {
  std::size_t n = 0;
  for (const ChatMessage& m : b.messages) n += m.text.size();
  return static_cast<long long>(n);
}

}  // namespace detail

/// Replays canned replies from a fixture table keyed by trace ids. Used for
/// golden tests and offline runs. Unknown queries get `fallback` (an empty
/// fallback produces a parse failure downstream).
class ScriptedBackend : public JudgeBackend {
 public:
  std::string id() const override { return "scripted"; }

  void set_independent(const std::string& trace_id, std::string reply) {
    independent_[trace_id] = std::move(reply);
  }
  void set_pairwise(const std::string& first, const std::string& second, std::string reply) {
    pairwise_[first + "|" + second] = std::move(reply);
  }
  void set_fallback(std::string reply) { fallback_ = std::move(reply); }

  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& j) {
    auto b = std::make_shared<ScriptedBackend>();
    if (j.contains("independent"))
      for (auto& [k, v] : j["independent"].items()) b->independent_[k] = v.get<std::string>();
    if (j.contains("pairwise"))
      for (auto& [k, v] : j["pairwise"].items()) b->pairwise_[k] = v.get<std::string>();
    if (j.contains("fallback")) b->fallback_ = j["fallback"].get<std::string>();
    return b;
  }

  static std::shared_ptr<ScriptedBackend> from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fixture file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  BackendReply complete(const PromptBundle& bundle, const QueryMeta& meta) override {
    std::string reply = fallback_;
    if (meta.kind == PromptKind::pairwise_math || meta.kind == PromptKind::pairwise_code) {
      auto it = pairwise_.find(meta.trace_a + "|" + meta.trace_b);
      if (it != pairwise_.end()) reply = it->second;
    } else {
      auto it = independent_.find(meta.trace_a);
      if (it != independent_.end()) reply = it->second;
    }
    return {reply, detail::approx_tokens(detail::bundle_chars(bundle)),
            detail::approx_tokens(reply.size())};
  }

 private:
  std::map<std::string, std::string> independent_;
  std::map<std::string, std::string> pairwise_;
  std::string fallback_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct JudgeConfig {
  std::string backend_id = "scripted";
  int replicates = 1;      // samples per query when estimating score expectations
  double temperature = 1.0;
  std::string reasoning_effort;  // forwarded verbatim when non-empty
  int retry_limit = 3;           // resamples after a parse failure
  double price_per_million_input = 0.0;
  double price_per_million_output = 0.0;
  bool symmetrize_pairwise = false;  // (s_ij + 1 - s_ji) / 2 at double cost
  TaskKind task = TaskKind::math;

  long long cost_nanousd(long long in_tok, long long out_tok) const {
    const long long nano_in = std::llround(price_per_million_input * 1000.0);
    const long long nano_out = std::llround(price_per_million_output * 1000.0);
    return in_tok * nano_in + out_tok * nano_out;
  }
};

/// Front door for all judge traffic: renders prompts, serves replicates from
/// the cache, retries parse failures, and meters cost. Results are pure
/// functions of (backend, config, prompt) once the cache is warm.
class JudgeGateway {
 public:
  JudgeGateway(std::shared_ptr<JudgeBackend> backend, JudgeConfig cfg,
               std::shared_ptr<JudgeCache> cache = nullptr,
               std::shared_ptr<CostLedger> ledger = nullptr)
      : backend_(std::move(backend)),
        cfg_(cfg),
        cache_(cache ? std::move(cache) : std::make_shared<JudgeCache>()),
        ledger_(ledger ? std::move(ledger) : std::make_shared<CostLedger>()) {}

  const JudgeConfig& config() const { return cfg_; }
  JudgeConfig& config() { return cfg_; }
  CostLedger& ledger() { return *ledger_; }
  const CostLedger& ledger() const { return *ledger_; }
  JudgeCache& cache() { return *cache_; }

  /// Mean of R replicate scores for one trace evaluated in isolation.
  double score_independent(const std::string& question, const Trace& trace, CostCategory cat) {
    const PromptBundle bundle = render_independent_prompt(question, trace, cfg_.task);
    const QueryMeta meta{bundle.kind, trace.trace_id, ""};
    return replicate_mean(bundle, meta, cat,
                          "independent score for trace " + trace.trace_id);
  }

  /// Monte-Carlo estimate of the probability that y_i is preferred to y_j.
  /// Argument order fixes the direction; the self-pair is 0.5 by convention
  /// and never queried.
  double score_pairwise(const std::string& question, const Trace& y_i, const Trace& y_j,
                        CostCategory cat) {
    if (y_i.trace_id == y_j.trace_id) return 0.5;
    const double forward = pairwise_one_direction(question, y_i, y_j, cat);
    if (!cfg_.symmetrize_pairwise) return forward;
    try {
      const double backward = pairwise_one_direction(question, y_j, y_i, cat);
      return 0.5 * (forward + (1.0 - backward));
    } catch (const ScoreUnavailable&) {
      return forward;
    }
  }

  /// Runs fn(i) for i in [0, n) across `threads` workers. Work items must be
  /// independent; results should be written to pre-sized slots keyed by i so
  /// the outcome does not depend on scheduling.
  template <typename Fn>
  static void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

 private:
  double pairwise_one_direction(const std::string& question, const Trace& y_i, const Trace& y_j,
                                CostCategory cat) {
    const PromptBundle bundle = render_pairwise_prompt(question, y_i, y_j, cfg_.task);
    const QueryMeta meta{bundle.kind, y_i.trace_id, y_j.trace_id};
    return replicate_mean(bundle, meta, cat,
                          "pairwise score for (" + y_i.trace_id + ", " + y_j.trace_id + ")");
  }

  double replicate_mean(const PromptBundle& bundle, const QueryMeta& meta, CostCategory cat,
                        const std::string& what) {
    double sum = 0.0;
    int ok = 0;
    for (int r = 0; r < cfg_.replicates; ++r) {
      const JudgeRecord rec = query(bundle, meta, r, cat);
      if (rec.parsed_score) {
        sum += *rec.parsed_score;
        ++ok;
      }
    }
    if (ok == 0) throw ScoreUnavailable(what + ": all replicates failed parsing");
    return sum / ok;
  }

  JudgeRecord query(const PromptBundle& bundle, const QueryMeta& meta, int replicate_index,
                    CostCategory cat) {
    const std::string id = record_id_for(backend_->id(), bundle, replicate_index);
    if (auto hit = cache_->lookup(id)) {
      ledger_->note_cache_hit(cat);
      return *hit;
    }
    JudgeRecord rec;
    rec.record_id = id;
    rec.kind = bundle.kind;
    const int attempts = 1 + std::max(0, cfg_.retry_limit);
    for (int a = 0; a < attempts; ++a) {
      BackendReply reply;
      try {
        reply = backend_->complete(bundle, meta);
      } catch (const std::exception& e) {
        rec.raw_output = std::string("<backend error: ") + e.what() + ">";
        continue;
      }
      rec.input_tokens += reply.input_tokens;
      rec.output_tokens += reply.output_tokens;
      rec.raw_output = reply.text;
      rec.parsed_score = try_parse_score(reply.text);
      if (rec.parsed_score) break;
    }
    rec.cost_nanousd = cfg_.cost_nanousd(rec.input_tokens, rec.output_tokens);
    rec.timestamp = std::to_string(std::time(nullptr));
    cache_->insert(rec);
    ledger_->add_live(cat, rec);
    return rec;
  }

  std::shared_ptr<JudgeBackend> backend_;
  JudgeConfig cfg_;
  std::shared_ptr<JudgeCache> cache_;
  std::shared_ptr<CostLedger> ledger_;
};

}  // namespace jc
