#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "jc/baselines.hpp"
#include "jc/field.hpp"
#include "jc/interaction.hpp"
#include "jc/solver.hpp"
#include "oracles.hpp"

using namespace jc;

namespace {

std::vector<Trace> pool_of(std::size_t n) {
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < n; ++i) answers.push_back("a" + std::to_string(i % 3));
  return oracle::traces_from_answers(answers);
}

}  // namespace

TEST_CASE("uniform field is all ones", "[field]") {
  CHECK(uniform_field(3).values == std::vector<double>{1, 1, 1});
  CHECK(uniform_field(1).values == std::vector<double>{1});
  const FieldVector f = uniform_field(17);
  double sum = 0;
  for (double v : f.values) sum += v;
  CHECK(sum == 17.0);
  CHECK(f.source == FieldSource::uniform);
}

TEST_CASE("judge field scores every trace", "[field]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_fallback("0.9");
  JudgeGateway gw(backend, JudgeConfig{});
  const auto pool = pool_of(5);
  const JudgeFieldResult r = judge_field("q", pool, gw);
  CHECK(r.field.values == std::vector<double>(5, 0.9));
  CHECK(r.imputed.empty());
  CHECK(r.field.source == FieldSource::judge);
}

TEST_CASE("judge field imputes the pool median on failure", "[field]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_independent("q-t0", "0.2");
  backend->set_independent("q-t1", "0.9");
  backend->set_independent("q-t2", "not a score");
  backend->set_independent("q-t3", "0.6");
  JudgeConfig cfg;
  cfg.retry_limit = 0;
  JudgeGateway gw(backend, cfg);
  const auto pool = pool_of(4);
  const JudgeFieldResult r = judge_field("q", pool, gw);
  CHECK(r.imputed == std::vector<std::size_t>{2});
  CHECK(r.field.values[2] == oracle::median({0.2, 0.9, 0.6}));
  for (double v : r.field.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // all failures: fall back to 0.5
  auto mute = std::make_shared<ScriptedBackend>();
  JudgeGateway gw2(mute, cfg);
  const JudgeFieldResult r2 = judge_field("q", pool, gw2);
  CHECK(r2.imputed.size() == 4);
  CHECK(r2.field.values == std::vector<double>(4, 0.5));
}

TEST_CASE("self-certainty field is a Borda power of log-prob ranks", "[field]") {
  // ranks 1,2,3 with q=2 -> (3-1+1)^2, (3-2+1)^2, (3-3+1)^2
  CHECK(self_certainty_field(std::vector<double>{-0.1, -0.5, -0.9}, 2.0).values ==
        std::vector<double>{9, 4, 1});
  CHECK(self_certainty_field(std::vector<double>{-0.2, -0.7}, 1.0).values ==
        std::vector<double>{2, 1});
  // equal log-probs: the earlier pool index takes the better rank
  CHECK(self_certainty_field(std::vector<double>{-0.3, -0.3}, 1.0).values ==
        std::vector<double>{2, 1});
  CHECK_THROWS_AS(self_certainty_field(std::vector<double>{0.0, std::nan("")}, 2.0),
                  IntrinsicUnavailable);
}

TEST_CASE("self-certainty is invariant to increasing transforms", "[field]") {
  Rng rng(23);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> lps;
    const std::size_t n = 2 + rng.index(10);
    for (std::size_t i = 0; i < n; ++i) lps.push_back(-3.0 + 3.0 * rng.real01());
    std::vector<double> warped;
    for (double v : lps) warped.push_back(std::exp(0.7 * v) * 2.0 + 1.0);  // strictly increasing
    CHECK(self_certainty_field(lps, 2.0).values == self_certainty_field(warped, 2.0).values);
  }
}

TEST_CASE("deepconf tail field averages the last window", "[field]") {
  CHECK(deepconf_tail_field({{1, 1, 0, 0}}, 2).values == std::vector<double>{0.0});
  CHECK(deepconf_tail_field({{0.2, 0.4, 0.6}}, 100).values ==
        std::vector<double>{(0.2 + 0.4 + 0.6) / 3});
  for (std::size_t w : {1u, 2u, 3u, 9u})
    CHECK(deepconf_tail_field({std::vector<double>(5, 0.7)}, w).values[0] ==
          Catch::Approx(0.7).margin(1e-15));
  CHECK_THROWS_AS(deepconf_tail_field({std::vector<double>{}}, 4), IntrinsicUnavailable);
  const auto pool = pool_of(2);  // no intrinsic signals attached
  CHECK_THROWS_AS(deepconf_tail_field(pool, 4), IntrinsicUnavailable);
}

TEST_CASE("scaling (h, mu) -> (a h, mu/a) leaves energies identical", "[field]") {
  Rng rng(29);
  for (double a : {2.0, 10.0, 0.5}) {
    for (int it = 0; it < 50; ++it) {
      const auto answers = oracle::random_answers(rng, 2 + rng.index(4), 5);
      Partition p = build_partition(oracle::traces_from_answers(answers));
      FieldVector h;
      h.source = FieldSource::judge;
      for (std::size_t i = 0; i < p.n(); ++i) h.values.push_back(rng.real01());
      FieldVector ha = h;
      for (double& v : ha.values) v *= a;
      AggregationConfig cfg;
      cfg.mode = SolveMode::h_only;
      cfg.mu = 0.7;
      AggregationConfig cfg_scaled = cfg;
      cfg_scaled.mu = cfg.mu / a;
      const EnergyReport r1 = solve(p, h, cfg);
      const EnergyReport r2 = solve(p, ha, cfg_scaled);
      for (std::size_t g = 0; g < r1.rows.size(); ++g)
        CHECK(std::abs(r1.rows[g].energy - r2.rows[g].energy) <= 1e-12);
    }
  }
}

TEST_CASE("uniform field with zero interaction reproduces majority vote", "[field]") {
  Rng rng(31);
  for (int it = 0; it < 100; ++it) {
    const auto answers = oracle::random_answers(rng, 1 + rng.index(5), 5);
    Partition p = build_partition(oracle::traces_from_answers(answers));
    // zero interaction: a preference matrix of zeros makes J identically zero
    PreferenceMatrix zero = PreferenceMatrix::diagonal_half(p.n());
    for (double& v : zero.p) v = 0.0;
    const InteractionExact inter = build_interaction_exact(zero, p);
    AggregationConfig cfg;
    cfg.mode = SolveMode::exact_J;
    cfg.mu = 1.0;
    const EnergyReport r = solve(p, uniform_field(p.n()), inter, cfg);
    // majority oracle: the largest group, earliest on ties
    std::size_t best = 0;
    for (std::size_t g = 1; g < p.k(); ++g)
      if (p.group_size(g) > p.group_size(best)) best = g;
    CHECK(r.chosen_group == best);
  }
}
