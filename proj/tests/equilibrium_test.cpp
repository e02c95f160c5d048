#include "doctest.h"
#include "qfm/equilibrium.hpp"
#include "qfm/property_suite.hpp"
#include "test_oracles.hpp"

#include <random>

using namespace qfm;

TEST_CASE("Example 2 float solve") {
  const Market m = market_cast<double>(testing::example2_market());
  const auto eq = solve(m);
  CHECK(eq.p_star[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(eq.p_star[1] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(eq.snapped);
  CHECK(eq.clearing.feasible);
  CHECK(eq.revenue == doctest::Approx(3.0).epsilon(1e-12));
  // Each buyer spends 1 at price 3/5, i.e. takes 5/3 units: buyer1 on B (value
  // 3), buyer3 on A (value 4), buyer2 on either (value 2): 5 + 20/3 + 10/3.
  CHECK(eq.welfare == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(eq.method_agreement <= 1e-8);
  CHECK(eq.efficiency.verdict == EfficiencyVerdict::certified);
}

TEST_CASE("Example 2 exact solve") {
  const auto eq = solve_exact(testing::example2_market());
  CHECK(eq.p_star == PriceVector<Rational>{Rational(3, 5), Rational(3, 5)});
  CHECK(eq.revenue == 3);
  CHECK(eq.welfare == 15);
  CHECK(aggregate(eq.allocation, 2) == std::vector<Rational>{Rational(3), Rational(2)});
}

TEST_CASE("Example 1 family: p* = beta1 + beta2") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long> draw(1, 40);
  for (int k = 0; k < 20; ++k) {
    Rational b2(draw(rng), 100);
    Rational b1 = b2 + Rational(draw(rng), 100);
    Rational v2 = b1 + b2 + Rational(draw(rng) - 1, 50);
    Rational v1 = v2 + Rational(draw(rng), 10);
    const auto m = testing::example1_market(b1, b2, v1, v2);
    const auto eq = solve_exact(m);
    CHECK(eq.p_star[0] == b1 + b2);
    CHECK(eq.allocation[0][0] == b1 / (b1 + b2));
  }
}

TEST_CASE("solver price is the unique clearing price, checked by the Hall oracle") {
  std::mt19937_64 rng(31);
  RandomMarketShape shape;
  shape.max_goods = 5;
  for (int k = 0; k < 40; ++k) {
    const ExactMarket m = random_market(rng, shape);
    const auto eq = solve_exact(m);
    CAPTURE(k);
    REQUIRE(eq.snapped);
    CHECK(testing::hall_clearing(m, eq.p_star));
    for (std::size_t j = 0; j < m.num_goods(); ++j) {
      auto lowered = eq.p_star;
      lowered[j] *= Rational(99, 100);
      CHECK_FALSE(testing::hall_feasible(m, lowered));
    }
    // Float pipeline agrees.
    const auto fq = solve(market_cast<double>(m));
    for (std::size_t j = 0; j < m.num_goods(); ++j)
      CHECK(fq.p_star[j] == doctest::Approx(to_double(eq.p_star[j])).epsilon(1e-9));
    CHECK(fq.method_agreement <= 1e-5);
  }
}

TEST_CASE("snap recovers p* from a perturbed estimate") {
  const ExactMarket m = testing::example2_market();
  const auto p = snap_to_equilibrium(m, PriceVector<double>{0.6 + 3e-8, 0.6 - 2e-8});
  REQUIRE(p.has_value());
  CHECK(*p == PriceVector<Rational>{Rational(3, 5), Rational(3, 5)});
  CHECK_FALSE(snap_to_equilibrium(m, PriceVector<double>{0.6}).has_value());
  CHECK_FALSE(snap_to_equilibrium(m, PriceVector<double>{0.6, -1.0}).has_value());
}

TEST_CASE("money-tied buyer fixes the scale") {
  // One rich buyer: budget slack, price rises to the value.
  ExactMarket m;
  m.goods = {{"X", Rational(2)}};
  m.buyers = {{"rich", {Rational(3)}, Rational(100)}, {"poor", {Rational(5)}, Rational(1)}};
  const auto eq = solve_exact(m);
  // At p = 3 the poor buyer buys 1/3, the rich one is tied and takes the rest.
  CHECK(eq.p_star == PriceVector<Rational>{Rational(3)});
  CHECK(testing::hall_clearing(m, eq.p_star));
}

TEST_CASE("disabling the snap falls back to the descent price") {
  SolveOptions options;
  options.snap = false;
  const auto eq = solve(market_cast<double>(testing::example2_market()), options);
  CHECK_FALSE(eq.snapped);
  CHECK(eq.p_star[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(eq.revenue == doctest::Approx(3.0).epsilon(1e-6));
}
