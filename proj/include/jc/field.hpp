#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "jc/errors.hpp"
#include "jc/judge.hpp"
#include "jc/trace.hpp"

namespace jc {

enum class FieldSource { uniform, judge, self_certainty, deepconf };

inline const char* to_string(FieldSource s) {
  switch (s) {
    case FieldSource::uniform: return "uniform";
    case FieldSource::judge: return "judge";
    case FieldSource::self_certainty: return "self_certainty";
    case FieldSource::deepconf: return "deepconf";
  }
  return "?";
}

/// Per-trace weights entering the linear term of the energy.
struct FieldVector {
  std::vector<double> values;
  FieldSource source = FieldSource::uniform;

  std::size_t size() const { return values.size(); }
};

inline FieldVector uniform_field(std::size_t n) {
  return FieldVector{std::vector<double>(n, 1.0), FieldSource::uniform};
}

struct JudgeFieldResult {
  FieldVector field;
  std::vector<std::size_t> imputed;  // pool indices whose score was unavailable
};

/// Independent judge scores per trace. Unavailable scores are imputed with
/// the median of the successful scores (0.5 when none succeeded) and the
/// affected indices are flagged for the run report.
inline JudgeFieldResult judge_field(const std::string& question, const std::vector<Trace>& pool,
                                    JudgeGateway& gateway, int threads = 1) {
  JudgeFieldResult out;
  out.field.source = FieldSource::judge;
  out.field.values.assign(pool.size(), std::nan(""));
  std::vector<char> failed(pool.size(), 0);
  JudgeGateway::parallel_for(pool.size(), threads, [&](std::size_t i) {
    try {
      out.field.values[i] = gateway.score_independent(question, pool[i], CostCategory::field);
    } catch (const ScoreUnavailable&) {
      failed[i] = 1;
    }
  });
  std::vector<double> ok;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!failed[i]) ok.push_back(out.field.values[i]);
  double fill = 0.5;
  if (!ok.empty()) {
    std::sort(ok.begin(), ok.end());
    const std::size_t m = ok.size();
    fill = (m % 2 == 1) ? ok[m / 2] : 0.5 * (ok[m / 2 - 1] + ok[m / 2]);
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (failed[i]) {
      out.field.values[i] = fill;
      out.imputed.push_back(i);
    }
  }
  return out;
}

/// Borda-style rank weights (N - r_i + 1)^q where r_i is the 1-based rank of
/// trace i by average log-probability, descending. Ties keep pool order.
/// Invariant under any strictly increasing transform of the log-probs.
inline FieldVector self_certainty_field(const std::vector<double>& avg_logprobs, double q) {
  const std::size_t n = avg_logprobs.size();
  for (double v : avg_logprobs)
    if (!std::isfinite(v)) throw IntrinsicUnavailable("non-finite avg_logprob");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return avg_logprobs[a] > avg_logprobs[b];
  });
  FieldVector f;
  f.source = FieldSource::self_certainty;
  f.values.assign(n, 0.0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t rank = pos + 1;
    f.values[order[pos]] = std::pow(static_cast<double>(n - rank + 1), q);
  }
  return f;
}

inline FieldVector self_certainty_field(const std::vector<Trace>& pool, double q) {
  std::vector<double> lps;
  lps.reserve(pool.size());
  for (const Trace& t : pool) {
    if (!t.intrinsic || !t.intrinsic->avg_logprob)
      throw IntrinsicUnavailable("trace " + t.trace_id + " has no avg_logprob");
    lps.push_back(*t.intrinsic->avg_logprob);
  }
  return self_certainty_field(lps, q);
}

/// Mean confidence over the last min(window, len) tokens of each trace.
inline FieldVector deepconf_tail_field(const std::vector<std::vector<double>>& confidences,
                                       std::size_t window) {
  FieldVector f;
  f.source = FieldSource::deepconf;
  f.values.reserve(confidences.size());
  for (const auto& seq : confidences) {
    if (seq.empty()) throw IntrinsicUnavailable("empty token_confidences");
    const std::size_t w = std::min(window, seq.size());
    const double sum = std::accumulate(seq.end() - w, seq.end(), 0.0);
    f.values.push_back(sum / static_cast<double>(w));
  }
  return f;
}

inline FieldVector deepconf_tail_field(const std::vector<Trace>& pool, std::size_t window) {
  std::vector<std::vector<double>> confs;
  confs.reserve(pool.size());
  for (const Trace& t : pool) {
    if (!t.intrinsic || !t.intrinsic->token_confidences)
      throw IntrinsicUnavailable("trace " + t.trace_id + " has no token_confidences");
    confs.push_back(*t.intrinsic->token_confidences);
  }
  return deepconf_tail_field(confs, window);
}

}  // namespace jc
