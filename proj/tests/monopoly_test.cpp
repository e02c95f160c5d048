#include "doctest.h"
#include "qfm/errors.hpp"
#include "qfm/monopoly.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace qfm;

namespace {

MonopolyInstance a1(double budget = 2.0) { return {example_a1(), 3.0, budget}; }

}  // namespace

TEST_CASE("exponential valuation: clearing point") {
  CHECK(clearing_price(a1()) == doctest::Approx(0.5).epsilon(1e-12));
  const auto at = revenue_at(a1(), 0.5);
  CHECK(at.quantity == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(at.revenue == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("exponential valuation: revenue at price 1 is 2") {
  const auto at = revenue_at(a1(), 1.0);
  CHECK(at.quantity == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(at.revenue == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exponential valuation: unbudgeted optimum is (4/e, 1/ln 2, 4/(e ln 2))") {
  const auto best = max_revenue_price(a1(kInfiniteBudget), 1e-12);
  CHECK(best.price == doctest::Approx(4.0 / std::exp(1.0)).epsilon(1e-7));
  CHECK(best.quantity == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-7));
  CHECK(best.revenue == doctest::Approx(4.0 / (std::exp(1.0) * std::log(2.0))).epsilon(1e-9));
}

TEST_CASE("exponential valuation with budget 2: least maximiser is price 1") {
  // Revenue p * min(log2(4/p), 2/p) rises to 2 at p = 1 and stays flat.
  const auto best = max_revenue_price(a1(), 1e-12);
  CHECK(best.price == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(best.revenue == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("demand below the affordability cap is not overstated") {
  // v'(x) = p gives x = log2(4 / p) = log2 6 at p = 2/3; the budget allows 3.
  CHECK(demand_single(a1(), 2.0 / 3.0) == doctest::Approx(std::log2(6.0)).epsilon(1e-12));
  CHECK(demand_single(a1(), 0.1) == doctest::Approx(std::log2(40.0)).epsilon(1e-12));
  CHECK(demand_single(a1(), 4.0) == 0.0);
  CHECK_THROWS_AS(demand_single(a1(), 0.0), std::domain_error);
}

TEST_CASE("exponential valuation admits a divergence witness") {
  const auto w = divergence_witness(example_a1(), 2.0, 3.0);
  REQUIRE(w.has_value());
  CHECK(w->supply == 3.0);
  CHECK(w->supply_condition);
  CHECK(w->revenue_at_reduced > w->revenue_at_supply);
  const double m = *example_a1().strong_concavity;
  CHECK(w->epsilon == doctest::Approx((m * 3.0 - 0.5) / (2 * m)));
}

TEST_CASE("budget exhaustion quantity") {
  // x v'(x) = 4 x 2^-x = 2 holds at x = 1 and x = 2; the smaller is returned.
  const auto x = budget_exhaustion_quantity(example_a1(), 2.0);
  REQUIRE(x.has_value());
  CHECK(*x == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(budget_exhaustion_quantity(example_a1(), kInfiniteBudget).has_value());
}

TEST_CASE("linear valuations: clearing and optimum coincide at min(v, beta/s)") {
  const MonopolyInstance tight{linear_valuation(5.0), 3.0, 2.0};
  CHECK(clearing_price(tight) == doctest::Approx(2.0 / 3.0));
  const auto best = max_revenue_price(tight, 1e-12);
  CHECK(best.price == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(best.revenue == doctest::Approx(2.0).epsilon(1e-9));
  const MonopolyInstance slack{linear_valuation(5.0), 3.0, 100.0};
  CHECK(max_revenue_price(slack, 1e-12).price == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(max_revenue_price(slack, 1e-12).revenue == doctest::Approx(15.0).epsilon(1e-9));
  CHECK_FALSE(divergence_witness(linear_valuation(5.0), 2.0, 3.0).has_value());
}

TEST_CASE("random linear triples") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int k = 0; k < 50; ++k) {
    const MonopolyInstance inst{linear_valuation(u(rng)), u(rng), u(rng)};
    const double expected = std::min(*inst.valuation.linear_value, inst.budget / inst.supply);
    CHECK(max_revenue_price(inst, 1e-12).price == doctest::Approx(expected).epsilon(1e-9));
    CHECK(clearing_price(inst) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("valuation specs") {
  CHECK(parse_valuation("example-a1").name == "example-a1");
  CHECK(*parse_valuation("linear:2.5").linear_value == 2.5);
  CHECK_THROWS_AS(parse_valuation("linear:"), std::invalid_argument);
  CHECK_THROWS_AS(parse_valuation("linear:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_valuation("linear:2x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_valuation("cubic"), std::invalid_argument);
}

TEST_CASE("a valuation with increasing marginal value is caught") {
  ConcaveValuation convex;
  convex.name = "convex";
  convex.value = [](double x) { return x * x; };
  convex.derivative = [](double x) { return 2.0 * x + 0.5; };
  CHECK_THROWS_AS(demand_single(MonopolyInstance{convex, 3.0, kInfiniteBudget}, 0.25), InvariantError);
}

TEST_CASE("negative supply is a domain error") {
  CHECK_THROWS_AS(clearing_price(MonopolyInstance{linear_valuation(1.0), -1.0, 1.0}), std::domain_error);
}
