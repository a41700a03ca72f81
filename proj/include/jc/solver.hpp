#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jc/errors.hpp"
#include "jc/field.hpp"
#include "jc/interaction.hpp"
#include "jc/trace.hpp"

namespace jc {

enum class SolveMode { exact_J, answer_level, h_only, J_only };

inline const char* to_string(SolveMode m) {
  switch (m) {
    case SolveMode::exact_J: return "exact_J";
    case SolveMode::answer_level: return "answer_level";
    case SolveMode::h_only: return "h_only";
    case SolveMode::J_only: return "J_only";
  }
  return "?";
}

inline std::optional<SolveMode> solve_mode_from_string(const std::string& s) {
  if (s == "exact_J" || s == "exact") return SolveMode::exact_J;
  if (s == "answer_level") return SolveMode::answer_level;
  if (s == "h_only") return SolveMode::h_only;
  if (s == "J_only" || s == "j_only") return SolveMode::J_only;
  return std::nullopt;
}

struct AggregationConfig {
  double mu = 0.5;  // weight of the independent-evaluation term
  SolveMode mode = SolveMode::exact_J;
  std::optional<std::size_t> kappa;  // answer-level candidate budget
  double tau = 1.0;
};

/// Energy of one candidate configuration: -mu * <h, 1_I> - quad.
inline double energy(const FieldVector& h, double quad,
                     std::span<const std::size_t> member_indices, double mu) {
  double field_sum = 0.0;
  for (std::size_t i : member_indices) field_sum += h.values[i];
  return -mu * field_sum - quad;
}

struct CandidateRow {
  std::size_t group = 0;
  std::string answer;
  double field_sum = 0.0;
  double quad = 0.0;
  double energy = 0.0;
};

/// Full account of one aggregation decision: per-candidate energies, the
/// chosen group, and the judge budget the run consumed.
struct EnergyReport {
  std::vector<CandidateRow> rows;  // one per eligible group, in group order
  std::size_t chosen_group = 0;
  std::string chosen_answer;
  bool tie_break_applied = false;
  std::vector<std::size_t> eligible_groups;
  LedgerTotals budget;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const CandidateRow& r : rows)
      j["rows"].push_back({{"group", r.group},
                           {"answer", r.answer},
                           {"field_sum", r.field_sum},
                           {"quad", r.quad},
                           {"energy", r.energy}});
    j["chosen_group"] = chosen_group;
    j["chosen_answer"] = chosen_answer;
    j["tie_break_applied"] = tie_break_applied;
    j["eligible_groups"] = eligible_groups;
    j["budget"] = {{"calls", budget.calls},
                   {"input_tokens", budget.input_tokens},
                   {"output_tokens", budget.output_tokens},
                   {"cost_usd", budget.cost_usd()}};
    return j;
  }
};

namespace detail {

/// Argmin with the deterministic tie rule: lowest energy, then larger group,
/// then earlier first appearance (= smaller group index).
inline void pick_minimum(const Partition& partition, EnergyReport& report) {
  if (report.rows.empty()) throw EmptyCandidateSet("no eligible answer group");
  std::size_t best = 0;
  for (std::size_t r = 1; r < report.rows.size(); ++r) {
    const CandidateRow& cur = report.rows[r];
    const CandidateRow& inc = report.rows[best];
    if (cur.energy < inc.energy) {
      best = r;
    } else if (cur.energy == inc.energy) {
      const std::size_t sc = partition.group_size(cur.group);
      const std::size_t si = partition.group_size(inc.group);
      if (sc > si || (sc == si && cur.group < inc.group)) best = r;
    }
  }
  report.chosen_group = report.rows[best].group;
  report.chosen_answer = report.rows[best].answer;
  int at_min = 0;
  for (const CandidateRow& r : report.rows)
    if (r.energy == report.rows[best].energy) ++at_min;
  report.tie_break_applied = at_min > 1;
}

inline EnergyReport solve_impl(const Partition& partition, const FieldVector& h,
                               const InteractionExact* exact, const BetaMatrix* beta,
                               const AggregationConfig& cfg) {
  if (h.size() != partition.n()) throw Error("field length does not match pool size");
  const bool use_field = cfg.mode != SolveMode::J_only;
  const bool use_interaction = cfg.mode != SolveMode::h_only;
  if (use_interaction && cfg.mode == SolveMode::exact_J && !exact)
    throw Error("exact_J mode requires an exact interaction");
  if (use_interaction && cfg.mode == SolveMode::answer_level && !beta)
    throw Error("answer_level mode requires a beta matrix");

  std::vector<std::size_t> eligible;
  if (use_interaction && beta && !exact) {
    eligible = beta->groups;  // groups without a beta row are ineligible
  } else {
    eligible.resize(partition.k());
    for (std::size_t g = 0; g < partition.k(); ++g) eligible[g] = g;
  }

  EnergyReport report;
  report.eligible_groups = eligible;
  for (std::size_t g : eligible) {
    CandidateRow row;
    row.group = g;
    row.answer = partition.groups[g].answer.key;
    const auto& members = partition.groups[g].members;
    if (use_field)
      for (std::size_t i : members) row.field_sum += h.values[i];
    if (use_interaction) {
      if (exact)
        row.quad = quadratic_term(*exact, members);
      else
        row.quad = answer_level_quadratic(*beta, g);
    }
    const double mu = use_field ? cfg.mu : 0.0;
    row.energy = -mu * row.field_sum - row.quad;
    report.rows.push_back(std::move(row));
  }
  pick_minimum(partition, report);
  return report;
}

}  // namespace detail

/// Field-only solve (majority or weighted vote, depending on h).
inline EnergyReport solve(const Partition& partition, const FieldVector& h,
                          const AggregationConfig& cfg) {
  AggregationConfig c = cfg;
  c.mode = SolveMode::h_only;
  return detail::solve_impl(partition, h, nullptr, nullptr, c);
}

inline EnergyReport solve(const Partition& partition, const FieldVector& h,
                          const InteractionExact& exact, const AggregationConfig& cfg) {
  return detail::solve_impl(partition, h, &exact, nullptr, cfg);
}

inline EnergyReport solve(const Partition& partition, const FieldVector& h,
                          const BetaMatrix& beta, const AggregationConfig& cfg) {
  return detail::solve_impl(partition, h, nullptr, &beta, cfg);
}

/// Independent reference implementation: materializes each indicator vector
/// explicitly and evaluates -mu h^T x - x^T J x by dense multiplication.
/// Same tie rule as solve(). Intended for test-scale pools.
inline std::size_t brute_force_oracle(const Partition& partition, const std::vector<double>& h,
                                      const std::vector<double>& j_dense, double mu) {
  const std::size_t n = partition.n();
  if (h.size() != n || j_dense.size() != n * n) throw Error("brute_force_oracle: bad dimensions");
  std::size_t best = 0;
  double best_energy = 0.0;
  for (std::size_t g = 0; g < partition.k(); ++g) {
    std::vector<double> x(n, 0.0);
    for (std::size_t i : partition.groups[g].members) x[i] = 1.0;
    double ht_x = 0.0;
    for (std::size_t i = 0; i < n; ++i) ht_x += h[i] * x[i];
    double xt_j_x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t l = 0; l < n; ++l) row += j_dense[i * n + l] * x[l];
      xt_j_x += x[i] * row;
    }
    const double e = -mu * ht_x - xt_j_x;
    if (g == 0 || e < best_energy) {
      best = g;
      best_energy = e;
    } else if (e == best_energy) {
      if (partition.group_size(g) > partition.group_size(best)) best = g;
      // equal size: keep the earlier group
    }
  }
  return best;
}

}  // namespace jc
