#include "doctest.h"
#include "qfm/property_suite.hpp"

#include <random>

using namespace qfm;

TEST_CASE("random markets are valid and reproducible") {
  std::mt19937_64 a(42), b(42);
  for (int k = 0; k < 30; ++k) {
    const ExactMarket x = random_market(a);
    const ExactMarket y = random_market(b);
    CHECK(validate_market(x).empty());
    REQUIRE(x.num_goods() == y.num_goods());
    REQUIRE(x.num_buyers() == y.num_buyers());
    CHECK(x.num_goods() <= 6);
    CHECK(x.num_buyers() <= 6);
    for (std::size_t i = 0; i < x.num_buyers(); ++i) CHECK(x.buyers[i].values == y.buyers[i].values);
  }
}

TEST_CASE("a small property suite passes") {
  PropertyOptions options;
  options.seed = 5;
  options.markets = 6;
  options.pairs_per_market = 30;
  options.grid_points = 1024;
  const auto result = run_property_suite(options);
  REQUIRE(result.reports.size() == 6);
  const char* names[] = {"meet-closure", "revenue-dominance", "ce-efficiency", "method-agreement", "minimality"};
  for (const char* name : names) {
    bool found = false;
    for (const auto& r : result.reports) {
      if (r.name != name) continue;
      found = true;
      CAPTURE(name);
      CHECK(r.cases > 0);
      CHECK(r.passed());
    }
    CHECK(found);
  }
  CHECK(result.upward_closure_checks > 0);
}
