#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "jc/errors.hpp"
#include "jc/field.hpp"
#include "jc/judge.hpp"
#include "jc/rng.hpp"
#include "jc/solver.hpp"
#include "jc/trace.hpp"

namespace jc {

/// One uniformly sampled trace's answer.
inline AnswerKey pass_at_1(const Partition& partition, Rng& rng) {
  const std::size_t i = rng.index(partition.n());
  return partition.groups[partition.group_of(i)].answer;
}

/// Answer of the single highest-scored trace; ties keep pool order.
inline AnswerKey best_of_n(const Partition& partition, const FieldVector& h) {
  if (h.size() != partition.n()) throw Error("best_of_n: field length mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < partition.n(); ++i)
    if (h.values[i] > h.values[best]) best = i;
  return partition.groups[partition.group_of(best)].answer;
}

/// argmax_k sum_{i in I_k} h_i with the solver tie rule. SC is the uniform
/// special case.
inline AnswerKey weighted_vote(const Partition& partition, const FieldVector& h) {
  AggregationConfig cfg;
  cfg.mode = SolveMode::h_only;
  cfg.mu = 1.0;
  return AnswerKey{solve(partition, h, cfg).chosen_answer};
}

inline AnswerKey majority_vote(const Partition& partition) {
  return weighted_vote(partition, uniform_field(partition.n()));
}

inline AnswerKey self_certainty_vote(const Partition& partition, double q = 2.0) {
  return weighted_vote(partition, self_certainty_field(partition.pool, q));
}

inline AnswerKey deepconf_vote(const Partition& partition, std::size_t window = 2048) {
  return weighted_vote(partition, deepconf_tail_field(partition.pool, window));
}

struct KnockoutConfig {
  std::size_t comparison_budget = 1;
  std::uint64_t rng_seed = 0;
  double win_threshold = 0.5;  // Response 1 advances iff score >= threshold
};

struct KnockoutMatch {
  std::size_t round = 0;     // 1-based
  std::size_t first = 0;     // pool index in the Response 1 slot
  std::size_t second = 0;    // pool index in the Response 2 slot
  bool same_answer = false;  // merged without a judge call
  double score = 0.5;
  std::size_t winner = 0;
};

struct KnockoutResult {
  AnswerKey winner;
  std::vector<KnockoutMatch> matches;
  std::size_t comparisons_used = 0;  // cross-answer matches judged
  bool budget_exhausted = false;
};

namespace detail {

/// Most frequent answer among the surviving traces; ties go to the larger
/// group, then to the group appearing first in the pool.
inline AnswerKey most_frequent_survivor(const Partition& partition,
                                        const std::vector<std::size_t>& survivors) {
  std::vector<std::size_t> count(partition.k(), 0);
  for (std::size_t i : survivors) count[partition.group_of(i)] += 1;
  std::size_t best_group = partition.k();
  for (std::size_t g = 0; g < partition.k(); ++g) {
    if (count[g] == 0) continue;
    if (best_group == partition.k() || count[g] > count[best_group] ||
        (count[g] == count[best_group] &&
         partition.group_size(g) > partition.group_size(best_group)))
      best_group = g;
  }
  return partition.groups[best_group].answer;
}

}  // namespace detail

/// Single-elimination aggregation over pairwise judgments. Each round
/// shuffles the survivors and pairs them off; same-answer pairs merge
/// without spending budget, cross-answer pairs cost one comparison, and an
/// odd survivor gets a bye. When the budget runs out the most frequent
/// surviving answer wins.
inline KnockoutResult knockout_tournament(const std::string& question, const Partition& partition,
                                          JudgeGateway& gateway, const KnockoutConfig& cfg,
                                          Rng& rng) {
  if (cfg.comparison_budget < 1) throw Error("knockout_tournament: budget must be >= 1");
  KnockoutResult result;
  std::vector<std::size_t> survivors(partition.n());
  for (std::size_t i = 0; i < partition.n(); ++i) survivors[i] = i;

  std::size_t round = 0;
  while (survivors.size() > 1) {
    ++round;
    rng.shuffle(survivors);
    std::vector<std::size_t> next;
    next.reserve(survivors.size() / 2 + 1);
    for (std::size_t t = 0; t + 1 < survivors.size(); t += 2) {
      const std::size_t a = survivors[t];
      const std::size_t b = survivors[t + 1];
      KnockoutMatch match;
      match.round = round;
      match.first = a;
      match.second = b;
      if (partition.group_of(a) == partition.group_of(b)) {
        match.same_answer = true;
        match.winner = a;  // merge: first advances without a judge call
        next.push_back(a);
        result.matches.push_back(match);
        continue;
      }
      if (result.comparisons_used == cfg.comparison_budget) {
        // Out of budget: everyone not yet eliminated stays a survivor.
        result.budget_exhausted = true;
        next.insert(next.end(), survivors.begin() + t, survivors.end());
        result.winner = detail::most_frequent_survivor(partition, next);
        return result;
      }
      match.score =
          gateway.score_pairwise(question, partition.pool[a], partition.pool[b],
                                 CostCategory::baseline);
      result.comparisons_used += 1;
      match.winner = match.score >= cfg.win_threshold ? a : b;
      next.push_back(match.winner);
      result.matches.push_back(match);
    }
    if (survivors.size() % 2 == 1) next.push_back(survivors.back());  // bye
    survivors = std::move(next);
  }
  result.winner = partition.groups[partition.group_of(survivors[0])].answer;
  return result;
}

inline KnockoutResult knockout_tournament(const std::string& question, const Partition& partition,
                                          JudgeGateway& gateway, const KnockoutConfig& cfg) {
  Rng rng(cfg.rng_seed);
  return knockout_tournament(question, partition, gateway, cfg, rng);
}

}  // namespace jc
