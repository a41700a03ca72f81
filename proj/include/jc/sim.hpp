#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "jc/errors.hpp"
#include "jc/field.hpp"
#include "jc/interaction.hpp"
#include "jc/judge.hpp"
#include "jc/rng.hpp"
#include "jc/trace.hpp"

namespace jc {

enum class SimLink { logistic, linear_clamped };

/// Controls for synthetic pools: latent answer qualities induce answer-level
/// preferences, optionally perturbed per trace pair.
struct SimConfig {
  std::size_t K = 2;
  std::vector<std::size_t> group_sizes;  // length K, all >= 1
  std::size_t correct_index = 0;         // in [0, K)
  std::vector<double> quality;           // length K, latent answer qualities
  SimLink link = SimLink::logistic;
  double noise_sigma = 0.0;  // trace-level perturbation of p, clamped to [0,1]
  double score_mean_correct = 0.8;
  double score_mean_incorrect = 0.4;
  double score_spread = 0.1;
  std::uint64_t seed = 0;
  std::string question_id = "sim-q";

  void validate() const {
    if (K < 1) throw Error("sim: K must be >= 1");
    if (group_sizes.size() != K || quality.size() != K)
      throw Error("sim: group_sizes and quality must have length K");
    for (std::size_t s : group_sizes)
      if (s < 1) throw Error("sim: group sizes must be >= 1");
    if (correct_index >= K) throw Error("sim: correct_index out of range");
    if (noise_sigma < 0) throw Error("sim: noise_sigma must be >= 0");
  }
};

namespace detail {

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

inline double link_value(SimLink link, double delta) {
  if (link == SimLink::logistic) return 1.0 / (1.0 + std::exp(-delta));
  return clamp01(0.5 + 0.25 * delta);  // symmetric around 0.5, so complementarity survives
}

}  // namespace detail

/// Ground-truth answer-level preferences from latent qualities.
/// beta[k][k'] + beta[k'][k] = 1 holds exactly off the diagonal.
inline BetaMatrix gen_beta(const std::vector<double>& quality, SimLink link = SimLink::logistic) {
  const std::size_t k = quality.size();
  if (k < 1) throw Error("gen_beta: need at least one answer");
  BetaMatrix beta;
  beta.groups.resize(k);
  for (std::size_t g = 0; g < k; ++g) beta.groups[g] = g;
  beta.beta.assign(k * k, 0.5);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double v = detail::link_value(link, quality[a] - quality[b]);
      beta.at(a, b) = v;
      beta.at(b, a) = 1.0 - v;
    }
  }
  return beta;
}

/// A generated pool plus its ground truth.
struct SimPool {
  std::vector<Trace> traces;
  PreferenceMatrix pref;       // trace-level preferences served by the sim judge
  FieldVector ground_scores;   // independent scores served by the sim judge
  BetaMatrix ground_beta;      // answer-level preferences the pool was built from
  std::size_t correct_group = 0;
};

/// Synthesizes a labeled pool. With noise_sigma = 0 the trace-level
/// preference matrix is exactly answer-level homogeneous.
inline SimPool gen_pool(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SimPool out;
  out.correct_group = cfg.correct_index;
  out.ground_beta = gen_beta(cfg.quality, cfg.link);

  std::vector<std::size_t> group_of;
  for (std::size_t g = 0; g < cfg.K; ++g) {
    for (std::size_t s = 0; s < cfg.group_sizes[g]; ++s) {
      const std::size_t i = out.traces.size();
      Trace t;
      t.trace_id = cfg.question_id + "-t" + std::to_string(i);
      t.question_id = cfg.question_id;
      t.generator_id = "sim";
      t.answer_raw = "ans" + std::to_string(g);
      t.content = "synthetic reasoning trace " + t.trace_id + " concluding ans" +
                  std::to_string(g);
      t.label = (g == cfg.correct_index);
      IntrinsicSignals sig;
      sig.avg_logprob = -1.0 + 0.2 * cfg.quality[g] + 0.05 * rng.gaussian();
      std::vector<double> confs(8);
      const double base = detail::clamp01(0.5 + 0.1 * cfg.quality[g]);
      for (double& c : confs) c = detail::clamp01(base + 0.05 * rng.gaussian());
      sig.token_confidences = std::move(confs);
      t.intrinsic = std::move(sig);
      out.traces.push_back(std::move(t));
      group_of.push_back(g);
    }
  }

  const std::size_t n = out.traces.size();
  out.pref = PreferenceMatrix::diagonal_half(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double v = out.ground_beta.at(group_of[i], group_of[j]);
      if (cfg.noise_sigma > 0) v = detail::clamp01(v + cfg.noise_sigma * rng.gaussian());
      out.pref.at(i, j) = v;
      out.pref.provenance[i * n + j] = PrefProvenance::queried;
    }
  }

  out.ground_scores.source = FieldSource::judge;
  out.ground_scores.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean =
        group_of[i] == cfg.correct_index ? cfg.score_mean_correct : cfg.score_mean_incorrect;
    out.ground_scores.values.push_back(detail::clamp01(mean + cfg.score_spread * rng.gaussian()));
  }
  return out;
}

/// The constructed hard case: the correct answer has the smallest group but
/// the highest quality, so majority voting is always wrong while
/// interaction-only aggregation is right under zero noise.
inline SimConfig preference_dominant_preset(std::uint64_t seed, double noise_sigma = 0.0) {
  SimConfig cfg;
  cfg.K = 4;
  cfg.group_sizes = {5, 4, 3, 2};
  cfg.correct_index = 3;
  cfg.quality = {0.0, 0.3, 0.6, 3.0};
  cfg.noise_sigma = noise_sigma;
  cfg.score_mean_correct = 0.7;
  cfg.score_mean_incorrect = 0.45;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------
// Sidecar (ground truth next to an emitted pool file)
// ---------------------------------------------------------------------------

inline nlohmann::json sim_sidecar_json(const SimPool& pool) {
  nlohmann::json j;
  j["correct_group"] = pool.correct_group;
  j["trace_ids"] = nlohmann::json::array();
  for (const Trace& t : pool.traces) j["trace_ids"].push_back(t.trace_id);
  j["ground_scores"] = pool.ground_scores.values;
  j["beta"] = nlohmann::json::array();
  const std::size_t k = pool.ground_beta.k();
  for (std::size_t a = 0; a < k; ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < k; ++b) row.push_back(pool.ground_beta.at(a, b));
    j["beta"].push_back(std::move(row));
  }
  const std::size_t n = pool.traces.size();
  j["pref"] = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t l = 0; l < n; ++l) row.push_back(pool.pref.at(i, l));
    j["pref"].push_back(std::move(row));
  }
  return j;
}

inline void write_sim_sidecar(const std::string& path, const SimPool& pool) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write sidecar: " + path);
  out << sim_sidecar_json(pool).dump(2) << "\n";
}

/// Judge backend that serves the simulator's ground truth: pairwise queries
/// get the trace-level preference entry, independent queries get the ground
/// score. Replies round-trip exactly through the score parser.
class SimJudgeBackend : public JudgeBackend {
 public:
  SimJudgeBackend(const SimPool& pool) {
    for (std::size_t i = 0; i < pool.traces.size(); ++i) index_[pool.traces[i].trace_id] = i;
    pref_ = pool.pref;
    scores_ = pool.ground_scores.values;
  }

  static std::shared_ptr<SimJudgeBackend> from_sidecar_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open sidecar: " + path);
    nlohmann::json j;
    in >> j;
    auto b = std::shared_ptr<SimJudgeBackend>(new SimJudgeBackend());
    const auto& ids = j.at("trace_ids");
    for (std::size_t i = 0; i < ids.size(); ++i) b->index_[ids[i].get<std::string>()] = i;
    b->scores_ = j.at("ground_scores").get<std::vector<double>>();
    const auto& pref = j.at("pref");
    const std::size_t n = pref.size();
    b->pref_ = PreferenceMatrix::diagonal_half(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l) b->pref_.at(i, l) = pref[i][l].get<double>();
    return b;
  }

  std::string id() const override { return "sim"; }

  BackendReply complete(const PromptBundle& bundle, const QueryMeta& meta) override {
    char buf[40];
    if (meta.kind == PromptKind::pairwise_math || meta.kind == PromptKind::pairwise_code) {
      const std::size_t i = index_of(meta.trace_a);
      const std::size_t j = index_of(meta.trace_b);
      std::snprintf(buf, sizeof(buf), "%.17g", pref_.at(i, j));
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", scores_[index_of(meta.trace_a)]);
    }
    std::string reply(buf);
    return {reply, detail_tokens(bundle), static_cast<long long>((reply.size() + 3) / 4)};
  }

 private:
  SimJudgeBackend() = default;

  std::size_t index_of(const std::string& trace_id) const {
    auto it = index_.find(trace_id);
    if (it == index_.end()) throw Error("sim judge: unknown trace " + trace_id);
    return it->second;
  }

  static long long detail_tokens(const PromptBundle& b) {
    std::size_t n = 0;
    for (const ChatMessage& m : b.messages) n += m.text.size();
    return static_cast<long long>((n + 3) / 4);
  }

  std::unordered_map<std::string, std::size_t> index_;
  PreferenceMatrix pref_;
  std::vector<double> scores_;
};

}  // namespace jc
