#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jc/errors.hpp"
#include "jc/judge.hpp"
#include "jc/rng.hpp"
#include "jc/trace.hpp"

namespace jc {

enum class PrefProvenance : std::uint8_t { queried, convention, complemented, imputed };

/// Dense matrix of ordered pairwise preference probabilities. The diagonal
/// is 0.5 by convention and is never queried.
struct PreferenceMatrix {
  std::size_t n = 0;
  std::vector<double> p;                  // row-major n*n, entries in [0,1]
  std::vector<PrefProvenance> provenance;  // parallel to p

  double at(std::size_t i, std::size_t j) const { return p[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return p[i * n + j]; }
  PrefProvenance prov(std::size_t i, std::size_t j) const { return provenance[i * n + j]; }

  std::size_t imputed_count() const {
    return std::count(provenance.begin(), provenance.end(), PrefProvenance::imputed);
  }

  static PreferenceMatrix diagonal_half(std::size_t n) {
    PreferenceMatrix m;
    m.n = n;
    m.p.assign(n * n, 0.5);
    m.provenance.assign(n * n, PrefProvenance::convention);
    return m;
  }
};

/// Fills every ordered off-diagonal pair from the judge. With
/// `complement_pairs`, only i<j is queried and p_ji := 1 - p_ij, halving
/// cost. Failures are imputed at 0.5 and flagged in the provenance.
inline PreferenceMatrix build_preference_matrix(const std::string& question,
                                                const std::vector<Trace>& pool,
                                                JudgeGateway& gateway,
                                                bool complement_pairs = false, int threads = 1) {
  const std::size_t n = pool.size();
  PreferenceMatrix m = PreferenceMatrix::diagonal_half(n);
  struct Cell {
    std::size_t i, j;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (complement_pairs && i > j) continue;
      cells.push_back({i, j});
    }
  JudgeGateway::parallel_for(cells.size(), threads, [&](std::size_t c) {
    const auto [i, j] = cells[c];
    try {
      m.at(i, j) = gateway.score_pairwise(question, pool[i], pool[j], CostCategory::interaction);
      m.provenance[i * n + j] = PrefProvenance::queried;
    } catch (const ScoreUnavailable&) {
      m.at(i, j) = 0.5;
      m.provenance[i * n + j] = PrefProvenance::imputed;
    }
  });
  if (complement_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        m.at(j, i) = 1.0 - m.at(i, j);
        m.provenance[j * n + i] = PrefProvenance::complemented;
      }
  }
  return m;
}

/// Exact interaction structure: C_ij = sqrt(p_ij^tau / (n_i^2 n_j)) and
/// J = C C^T, which is symmetric positive semi-definite by construction.
/// n_i is the size of the answer group containing trace i.
struct InteractionExact {
  std::size_t n = 0;
  std::vector<double> C;  // row-major
  std::vector<double> J;  // row-major, = C * C^T
  std::vector<std::size_t> group_size_of;  // n_i per trace
  double tau = 1.0;

  double j_at(std::size_t i, std::size_t j) const { return J[i * n + j]; }
  double c_at(std::size_t i, std::size_t j) const { return C[i * n + j]; }
};

inline InteractionExact build_interaction_exact(const PreferenceMatrix& p,
                                                const Partition& partition, double tau = 1.0) {
  const std::size_t n = partition.n();
  if (p.n != n) throw Error("preference matrix size does not match partition pool");
  InteractionExact out;
  out.n = n;
  out.tau = tau;
  out.group_size_of.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.group_size_of[i] = partition.group_size(partition.group_of(i));
  out.C.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ni = static_cast<double>(out.group_size_of[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double nj = static_cast<double>(out.group_size_of[j]);
      const double pt = (tau == 1.0) ? p.at(i, j) : std::pow(p.at(i, j), tau);
      out.C[i * n + j] = std::sqrt(pt / (ni * ni * nj));
    }
  }
  out.J.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < n; ++l) s += out.C[i * n + l] * out.C[j * n + l];
      out.J[i * n + j] = s;
      out.J[j * n + i] = s;
    }
  }
  return out;
}

/// x^T J x for the indicator of one answer group: the sum of J over the
/// group's index square.
inline double quadratic_term(const InteractionExact& inter,
                             std::span<const std::size_t> member_indices) {
  double s = 0.0;
  for (std::size_t i : member_indices)
    for (std::size_t j : member_indices) s += inter.j_at(i, j);
  return s;
}

enum class DiagonalPolicy { convention_half, queried };

/// Answer-level preference estimates over the (top-kappa) groups.
struct BetaMatrix {
  std::vector<std::size_t> groups;  // partition group indices covered by this matrix
  std::vector<double> beta;         // row-major k*k over `groups`
  int samples_per_cell = 1;
  DiagonalPolicy diagonal_policy = DiagonalPolicy::convention_half;
  std::size_t imputed_cells = 0;

  std::size_t k() const { return groups.size(); }
  double at(std::size_t a, std::size_t b) const { return beta[a * groups.size() + b]; }
  double& at(std::size_t a, std::size_t b) { return beta[a * groups.size() + b]; }

  /// Position of a partition group index within `groups`, if covered.
  std::optional<std::size_t> position_of(std::size_t group_index) const {
    for (std::size_t a = 0; a < groups.size(); ++a)
      if (groups[a] == group_index) return a;
    return std::nullopt;
  }
};

/// Estimates answer-level preferences over the top-kappa groups by sampling
/// m trace pairs per ordered group pair (one trace from each group, without
/// replacement within a group until exhausted). The diagonal defaults to 0.5
/// with zero queries, so at most m*kappa*(kappa-1) live calls are spent.
inline BetaMatrix estimate_beta(const std::string& question, const Partition& partition,
                                std::size_t kappa, int m, JudgeGateway& gateway, Rng& rng,
                                DiagonalPolicy diagonal = DiagonalPolicy::convention_half,
                                int threads = 1) {
  if (m < 1) throw Error("estimate_beta: m must be >= 1");
  if (kappa < 1) throw Error("estimate_beta: kappa must be >= 1");
  BetaMatrix out;
  out.groups = top_kappa(partition, kappa);
  out.samples_per_cell = m;
  out.diagonal_policy = diagonal;
  const std::size_t k = out.groups.size();
  out.beta.assign(k * k, 0.5);

  // Cyclic without-replacement sampler over one group's members.
  struct GroupSampler {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
    std::size_t next(Rng& rng) {
      if (pos == order.size()) {
        rng.shuffle(order);
        pos = 0;
      }
      return order[pos++];
    }
  };

  struct Draw {
    std::size_t cell_a, cell_b;  // positions in out.groups
    std::size_t i, j;            // pool indices to compare
  };
  std::vector<Draw> draws;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b && diagonal == DiagonalPolicy::convention_half) continue;
      const auto& ga = partition.groups[out.groups[a]].members;
      const auto& gb = partition.groups[out.groups[b]].members;
      if (a == b && ga.size() < 2) continue;  // no distinct pair exists; keep 0.5
      GroupSampler sa{ga, ga.size()};  // pos at end forces an initial shuffle
      GroupSampler sb{gb, gb.size()};
      for (int s = 0; s < m; ++s) {
        std::size_t i = sa.next(rng);
        std::size_t j = sb.next(rng);
        if (a == b) {
          while (j == i) j = sb.next(rng);
        }
        draws.push_back({a, b, i, j});
      }
    }
  }

  std::vector<double> scores(draws.size());
  std::vector<char> failed(draws.size(), 0);
  JudgeGateway::parallel_for(draws.size(), threads, [&](std::size_t d) {
    try {
      scores[d] = gateway.score_pairwise(question, partition.pool[draws[d].i],
                                         partition.pool[draws[d].j], CostCategory::interaction);
    } catch (const ScoreUnavailable&) {
      failed[d] = 1;
    }
  });

  std::vector<double> sum(k * k, 0.0);
  std::vector<int> cnt(k * k, 0);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    if (failed[d]) continue;
    sum[draws[d].cell_a * k + draws[d].cell_b] += scores[d];
    cnt[draws[d].cell_a * k + draws[d].cell_b] += 1;
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b && diagonal == DiagonalPolicy::convention_half) continue;
      if (cnt[a * k + b] > 0) {
        out.at(a, b) = sum[a * k + b] / cnt[a * k + b];
      } else if (!(a == b)) {
        out.at(a, b) = 0.5;  // imputed: every sample failed
        ++out.imputed_cells;
      }
    }
  }
  return out;
}

/// Row sum of the answer-level preferences for one group (diagonal
/// included): the quadratic term of the energy under answer-level
/// homogeneity. `group_index` is a partition group index.
inline double answer_level_quadratic(const BetaMatrix& beta, std::size_t group_index) {
  const auto pos = beta.position_of(group_index);
  if (!pos) throw CandidateNotScored("group " + std::to_string(group_index) +
                                     " has no row in the beta matrix");
  double s = 0.0;
  for (std::size_t b = 0; b < beta.k(); ++b) s += beta.at(*pos, b);
  return s;
}

// ---------------------------------------------------------------------------
// Matrix dumps (audit output)
// ---------------------------------------------------------------------------

inline nlohmann::json beta_to_json(const BetaMatrix& beta, const Partition& partition) {
  nlohmann::json j;
  j["kind"] = "beta";
  j["samples_per_cell"] = beta.samples_per_cell;
  j["diagonal_policy"] =
      beta.diagonal_policy == DiagonalPolicy::convention_half ? "convention_half" : "queried";
  j["imputed_cells"] = beta.imputed_cells;
  j["groups"] = nlohmann::json::array();
  for (std::size_t g : beta.groups)
    j["groups"].push_back({{"group", g},
                           {"answer", partition.groups[g].answer.key},
                           {"size", partition.group_size(g)}});
  j["beta"] = nlohmann::json::array();
  for (std::size_t a = 0; a < beta.k(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < beta.k(); ++b) row.push_back(beta.at(a, b));
    j["beta"].push_back(std::move(row));
  }
  return j;
}

inline nlohmann::json interaction_to_json(const InteractionExact& inter,
                                          const Partition& partition) {
  nlohmann::json j;
  j["kind"] = "exact";
  j["tau"] = inter.tau;
  j["groups"] = nlohmann::json::array();
  for (std::size_t g = 0; g < partition.k(); ++g)
    j["groups"].push_back({{"group", g},
                           {"answer", partition.groups[g].answer.key},
                           {"size", partition.group_size(g)}});
  j["J"] = nlohmann::json::array();
  for (std::size_t i = 0; i < inter.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t l = 0; l < inter.n; ++l) row.push_back(inter.j_at(i, l));
    j["J"].push_back(std::move(row));
  }
  return j;
}

}  // namespace jc
