#pragma once

// Test-only oracles. Everything here recomputes expectations from first
// principles, independently of the library's own code paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "jc/rng.hpp"
#include "jc/trace.hpp"

namespace oracle {

/// Brute-force grouping: answer string -> indices, in first-appearance order.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_answer(
    const std::vector<std::string>& answers) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    bool found = false;
    for (auto& [key, members] : groups) {
      if (key == answers[i]) {
        members.push_back(i);
        found = true;
        break;
      }
    }
    if (!found) groups.push_back({answers[i], {i}});
  }
  return groups;
}

/// Dense energy -mu h^T x - x^T J x evaluated with explicit loops.
inline double dense_energy(const std::vector<double>& h, const std::vector<double>& j_dense,
                           const std::vector<std::size_t>& members, double mu) {
  const std::size_t n = h.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t i : members) x[i] = 1.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) lin += h[i] * x[i];
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < n; ++l) quad += x[i] * j_dense[i * n + l] * x[l];
  return -mu * lin - quad;
}

/// Spreadsheet-style mean and sample standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, sd};
}

/// Median by direct sort.
inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size();
  return (m % 2 == 1) ? xs[m / 2] : 0.5 * (xs[m / 2 - 1] + xs[m / 2]);
}

/// Least-squares fit y = a + b x; returns (a, b, r_squared).
struct LinearFit {
  double intercept, slope, r2;
};
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = a + b * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  return {a, b, 1.0 - ss_res / ss_tot};
}

/// Random pool of answer labels: K groups with the given sizes, shuffled.
inline std::vector<std::string> random_answers(jc::Rng& rng, std::size_t k,
                                               std::size_t max_group    ) {
  std::vector<std::string> answers;
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t size = 1 + rng.index(max_group);
    for (std::size_t s = 0; s < size; ++s) answers.push_back("a" + std::to_string(g));
  }
  rng.shuffle(answers);
  return answers;
}

inline std::vector<jc::Trace> traces_from_answers(const std::vector<std::string>& answers,
                                                  const std::string& qid = "q") {
  std::vector<jc::Trace> pool;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    jc::Trace t;
    t.trace_id = qid + "-t" + std::to_string(i);
    t.question_id = qid;
    t.content = "trace " + t.trace_id + " answering " + answers[i];
    t.answer_raw = answers[i];
    pool.push_back(std::move(t));
  }
  return pool;
}

}  // namespace oracle
