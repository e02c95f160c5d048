#include "doctest.h"
#include "qfm/market.hpp"
#include "qfm/property_suite.hpp"
#include "test_oracles.hpp"

#include <random>
#include <stdexcept>

using namespace qfm;
using qfm::testing::example2_market;

TEST_CASE("rational parsing accepts fractions, integers and decimals") {
  CHECK(parse_rational("3/5") == Rational(3, 5));
  CHECK(parse_rational("-6/4") == Rational(-3, 2));
  CHECK(parse_rational("7") == Rational(7));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("1.5e-2") == Rational(3, 200));
  CHECK(parse_rational(" 2 ") == Rational(2));
  CHECK(parse_rational(".5") == Rational(1, 2));
}

TEST_CASE("leading zeros are decimal, not octal") {
  CHECK(parse_rational("010") == Rational(10));
  CHECK(parse_rational("08/010") == Rational(4, 5));
  CHECK(parse_rational("0.010") == Rational(1, 100));
}

TEST_CASE("rational parsing rejects junk") {
  CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1e"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1/2/3"), std::invalid_argument);
}

TEST_CASE("rational rendering") {
  CHECK(to_string(Rational(3, 5)) == "3/5");
  CHECK(to_string(Rational(4)) == "4");
  CHECK(rational_from_double(0.3) == Rational(3, 10));
  CHECK(to_terminating_decimal(Rational(3, 8)) == "0.375");
  CHECK(to_terminating_decimal(Rational(-1, 20)) == "-0.05");
  CHECK_FALSE(to_terminating_decimal(Rational(1, 3)).has_value());
  CHECK_THROWS_AS(rational_from_double(std::nan("")), std::invalid_argument);
}

TEST_CASE("example markets validate") {
  CHECK(validate_market(example2_market()).empty());
  CHECK_NOTHROW(require_valid(example2_market()));
}

TEST_CASE("validation reports each broken invariant") {
  ExactMarket m = example2_market();
  SUBCASE("no buyers") {
    m.buyers.clear();
    CHECK_THROWS_AS(require_valid(m), ValidationError);
  }
  SUBCASE("negative budget") {
    m.buyers[0].budget = -1;
    CHECK_FALSE(validate_market(m).empty());
  }
  SUBCASE("zero supply is rejected only when negative") {
    m.goods[0].supply = -1;
    CHECK_FALSE(validate_market(m).empty());
  }
  SUBCASE("value vector of the wrong length") {
    m.buyers[1].values.pop_back();
    CHECK_FALSE(validate_market(m).empty());
  }
  SUBCASE("good valued only by a zero-budget buyer") {
    m.goods.push_back({"C", Rational(1)});
    for (auto& b : m.buyers) b.values.push_back(Rational(0));
    m.buyers.push_back({"idle", {Rational(0), Rational(0), Rational(5)}, Rational(0)});
    const auto violations = validate_market(m);
    REQUIRE_FALSE(violations.empty());
    CHECK(violations.front().entity == "good[2]");
  }
}

TEST_CASE("bang-per-buck sets at the Example 2 equilibrium match the ratio oracle") {
  const ExactMarket m = example2_market();
  const PriceVector<Rational> p{Rational(3, 5), Rational(3, 5)};
  for (const auto& b : m.buyers) {
    const auto reference = testing::exact_demand(b, p);
    const auto set = bang_per_buck(b, p, Rational(0));
    CHECK(set.money == reference.money);
    for (std::size_t j = 0; j < p.size(); ++j) CHECK(set.contains(j) == reference.goods[j]);
  }
  // Frozen from the oracle: buyer1 {B}, buyer2 {A, B}, buyer3 {A}.
  CHECK(bang_per_buck(m.buyers[0], p, Rational(0)).goods == std::vector<std::size_t>{1});
  CHECK(bang_per_buck(m.buyers[1], p, Rational(0)).goods == std::vector<std::size_t>{0, 1});
  CHECK(bang_per_buck(m.buyers[2], p, Rational(0)).goods == std::vector<std::size_t>{0});
}

TEST_CASE("money joins the demand set when the best ratio is one") {
  const Buyer<Rational> b{"b", {Rational(2), Rational(1)}, Rational(1)};
  const auto tied = bang_per_buck(b, PriceVector<Rational>{Rational(2), Rational(5)}, Rational(0));
  CHECK(tied.money);
  CHECK(tied.goods == std::vector<std::size_t>{0});
  const auto priced_out = bang_per_buck(b, PriceVector<Rational>{Rational(3), Rational(5)}, Rational(0));
  CHECK(priced_out.money);
  CHECK(priced_out.empty_of_goods());
}

TEST_CASE("nonpositive prices are rejected") {
  const Buyer<double> b{"b", {1.0}, 1.0};
  CHECK_THROWS_AS(bang_per_buck(b, PriceVector<double>{0.0}, 0.0), std::domain_error);
}

TEST_CASE("float tie band is relative") {
  const Buyer<double> b{"b", {1.0, 1.0}, 1.0};
  const auto set = bang_per_buck(b, PriceVector<double>{0.5, 0.5 * (1 + 1e-12)}, 1e-9);
  CHECK(set.goods.size() == 2);
  const auto strict = bang_per_buck(b, PriceVector<double>{0.5, 0.5 * (1 + 1e-6)}, 1e-9);
  CHECK(strict.goods.size() == 1);
}

TEST_CASE("demand vertices and membership") {
  const Buyer<Rational> b{"b", {Rational(2), Rational(3)}, Rational(1)};
  const PriceVector<Rational> p{Rational(2), Rational(3)};  // both goods and money tied
  const auto vertices = demand_vertices(b, p, Rational(0));
  CHECK(vertices.size() == 3);
  CHECK(is_demanded(b, p, Bundle<Rational>{Rational(1, 4), Rational(1, 6)}, Rational(0)));
  CHECK(is_demanded(b, p, Bundle<Rational>{Rational(0), Rational(0)}, Rational(0)));
  // Over budget.
  CHECK_FALSE(is_demanded(b, p, Bundle<Rational>{Rational(1), Rational(0)}, Rational(0)));
  // Strict buyer must spend everything.
  const PriceVector<Rational> cheap{Rational(1), Rational(3)};
  CHECK_FALSE(is_demanded(b, cheap, Bundle<Rational>{Rational(1, 2), Rational(0)}, Rational(0)));
  CHECK(is_demanded(b, cheap, Bundle<Rational>{Rational(1), Rational(0)}, Rational(0)));
}

TEST_CASE("worthless goods are stripped") {
  ExactMarket m = example2_market();
  m.goods.push_back({"C", Rational(1)});
  for (auto& b : m.buyers) b.values.push_back(Rational(0));
  const auto stripped = strip_worthless_goods(m);
  CHECK(stripped.num_goods() == 2);
  CHECK(stripped.buyers[0].values.size() == 2);
}

TEST_CASE("market casts round-trip short decimals") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const ExactMarket m = random_market(rng);
    const auto back = market_cast<Rational>(market_cast<double>(m));
    for (std::size_t j = 0; j < m.num_goods(); ++j)
      CHECK(to_double(back.goods[j].supply) == doctest::Approx(to_double(m.goods[j].supply)));
    CHECK(validate_market(back).empty());
  }
  CHECK(dot(std::vector<Rational>{Rational(1), Rational(2)}, std::vector<Rational>{Rational(3), Rational(4)}) ==
        Rational(11));
}
