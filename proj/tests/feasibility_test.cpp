#include "doctest.h"
#include "qfm/feasibility.hpp"
#include "qfm/metrics.hpp"
#include "qfm/property_suite.hpp"
#include "test_oracles.hpp"

#include <algorithm>
#include <random>

using namespace qfm;
using testing::example2_market;
using testing::hall_clearing;
using testing::hall_feasible;

namespace {

PriceVector<Rational> price(const char* a, const char* b) { return {parse_rational(a), parse_rational(b)}; }

// Random positive price vector on a coarse rational lattice.
PriceVector<Rational> random_price(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<long> num(1, 24);
  PriceVector<Rational> p;
  for (std::size_t j = 0; j < n; ++j) p.push_back(Rational(num(rng), 4));
  return p;
}

}  // namespace

TEST_CASE("Example 2 membership verdicts agree with the Hall oracle") {
  const ExactMarket m = example2_market();
  struct Case {
    const char* a;
    const char* b;
    bool feasible;
  };
  for (const Case c : {Case{"3/5", "3/5", true}, Case{"2", "2", true}, Case{"1/2", "1/2", false},
                       Case{"9/10", "7/10", false}, Case{"13/20", "13/20", true}}) {
    const auto p = price(c.a, c.b);
    CAPTURE(c.a);
    CAPTURE(c.b);
    REQUIRE(hall_feasible(m, p) == c.feasible);
    CHECK(check_feasible(m, p, Rational(0)).feasible == c.feasible);
    CHECK(check_feasible(market_cast<double>(m), vector_cast<double>(p), 1e-9).feasible == c.feasible);
  }
}

TEST_CASE("Example 2 clears at p* with revenue 3") {
  const ExactMarket m = example2_market();
  const auto p = price("3/5", "3/5");
  REQUIRE(hall_clearing(m, p));
  const auto cert = check_clearing(m, p, Rational(0));
  REQUIRE(cert.feasible);
  CHECK(cert.revenue == 3);
  CHECK(is_feasible_outcome(m, Outcome<Rational>{p, *cert.allocation}, Rational(0)));
  CHECK(aggregate(*cert.allocation, 2) == std::vector<Rational>{Rational(3), Rational(2)});
}

TEST_CASE("Example 2 at (0.65, 0.65) is feasible, not clearing, revenue 3") {
  const ExactMarket m = example2_market();
  const auto p = price("13/20", "13/20");
  REQUIRE_FALSE(hall_clearing(m, p));
  const auto feasible = check_feasible(m, p, Rational(0));
  CHECK(feasible.feasible);
  CHECK(feasible.revenue == 3);
  const auto clearing = check_clearing(m, p, Rational(0));
  CHECK_FALSE(clearing.feasible);
  CHECK(clearing.witness_kind == WitnessKind::under_sold);
}

TEST_CASE("Example 2 at (0.5, 0.5): over-demand witness is a violated Hall set") {
  const ExactMarket m = example2_market();
  const auto p = price("1/2", "1/2");
  const auto cert = check_feasible(m, p, Rational(0));
  REQUIRE_FALSE(cert.feasible);
  CHECK(cert.witness_kind == WitnessKind::over_demand);
  CHECK(std::find(cert.witness.begin(), cert.witness.end(), 0u) != cert.witness.end());
  // Recompute the witness condition independently.
  std::uint32_t mask = 0;
  for (std::size_t j : cert.witness) mask |= 1u << j;
  Rational need(0);
  for (const auto& b : m.buyers) {
    const auto d = testing::exact_demand(b, p);
    if (!d.money && testing::inside(d.goods, mask)) need += b.budget;
  }
  const Rational excess = need - testing::capacity(m, p, mask);
  CHECK(excess > 0);
  CHECK(cert.witness_excess == excess);
  // Frozen from the oracle: goods {A, B}, excess 3 - 5/2.
  CHECK(cert.witness == std::vector<std::size_t>{0, 1});
  CHECK(excess == Rational(1, 2));
}

TEST_CASE("flow verdicts match the Hall oracle on random markets") {
  std::mt19937_64 rng(2024);
  RandomMarketShape shape;
  shape.max_goods = 4;
  shape.max_buyers = 5;
  int feasible_seen = 0, clearing_seen = 0;
  for (int k = 0; k < 60; ++k) {
    const ExactMarket m = random_market(rng, shape);
    for (int t = 0; t < 25; ++t) {
      const auto p = random_price(rng, m.num_goods());
      const bool feasible = hall_feasible(m, p);
      const bool clearing = hall_clearing(m, p);
      const auto fc = check_feasible(m, p, Rational(0));
      const auto cc = check_clearing(m, p, Rational(0));
      REQUIRE(fc.feasible == feasible);
      REQUIRE(cc.feasible == clearing);
      REQUIRE(is_feasible_price_unchecked(m, p, Rational(0)) == feasible);
      feasible_seen += feasible;
      clearing_seen += clearing;
      if (feasible) {
        const Outcome<Rational> outcome{p, *fc.allocation};
        CHECK(is_feasible_outcome(m, outcome, Rational(0)));
        CHECK(revenue(outcome) == fc.revenue);
        CHECK(max_extension(m, p, Rational(0)).revenue == fc.revenue);
      }
      if (clearing) {
        CHECK(is_competitive_equilibrium(m, Outcome<Rational>{p, *cc.allocation}, Rational(0)));
        // A clearing allocation sells everything, so it also maximises revenue.
        CHECK(cc.revenue == fc.revenue);
      }
    }
  }
  // The sample must exercise both verdicts.
  CHECK(feasible_seen > 50);
  CHECK(clearing_seen > 0);
}

TEST_CASE("scaling a feasible price up keeps it feasible") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 40; ++k) {
    const ExactMarket m = random_market(rng);
    const auto p = random_price(rng, m.num_goods());
    if (!check_feasible(m, p, Rational(0)).feasible) continue;
    for (const Rational lambda : {Rational(11, 10), Rational(2), Rational(7)}) {
      auto q = p;
      for (auto& x : q) x *= lambda;
      CHECK(check_feasible(m, q, Rational(0)).feasible);
    }
  }
}

TEST_CASE("meet of feasible prices is feasible and meet_allocation certifies it") {
  std::mt19937_64 rng(99);
  RandomMarketShape shape;
  shape.max_goods = 4;
  int pairs = 0;
  for (int k = 0; k < 40; ++k) {
    const ExactMarket m = random_market(rng, shape);
    for (int t = 0; t < 30; ++t) {
      const auto p = random_price(rng, m.num_goods());
      const auto q = random_price(rng, m.num_goods());
      const auto x = check_feasible(m, p, Rational(0));
      const auto y = check_feasible(m, q, Rational(0));
      if (!x.feasible || !y.feasible) continue;
      ++pairs;
      const auto r = meet(p, q);
      for (std::size_t j = 0; j < r.size(); ++j) CHECK(r[j] == std::min(p[j], q[j]));
      REQUIRE(hall_feasible(m, r));
      const auto z = meet_allocation(m, p, q, *x.allocation, *y.allocation, Rational(0));
      CHECK(is_feasible_outcome(m, Outcome<Rational>{r, z}, Rational(0)));
    }
  }
  CHECK(pairs > 100);
}

TEST_CASE("spending graph classifies buyers") {
  const ExactMarket m = example2_market();
  const auto g = build_spending_graph(m, price("2", "2"), Rational(0));
  // At (2, 2) buyer2 is tied with money, buyer1 and buyer3 are not.
  CHECK(g.buyer_class == std::vector<BuyerClass>{BuyerClass::strict, BuyerClass::flexible, BuyerClass::strict});
  CHECK(g.capacity == std::vector<Rational>{Rational(6), Rational(4)});
  CHECK(g.edges.size() == 4);
}

TEST_CASE("dimension mismatch is a precondition error") {
  CHECK_THROWS_AS(check_feasible(example2_market(), PriceVector<Rational>{Rational(1)}, Rational(0)),
                  PreconditionError);
}
