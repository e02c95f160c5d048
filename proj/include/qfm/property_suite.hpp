#pragma once

// Randomised structural checks on small exact markets: meet-closure of the
// feasible region, the demand-partition behaviour of the meet, revenue
// dominance of the equilibrium, equilibrium = constrained efficiency, and
// agreement plus minimality of the two equilibrium routes.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

struct RandomMarketShape {
  std::size_t max_goods = 6;
  std::size_t max_buyers = 6;
  long max_numerator = 10;
  long max_denominator = 4;
};

// Entries are k / d with small k, d. Supplies and budgets are positive;
// values may be zero but every good is valued by some buyer.
ExactMarket random_market(std::mt19937_64& rng, const RandomMarketShape& shape = {});

struct PropertyOptions {
  std::uint64_t seed = 20240611;
  std::size_t markets = 20;
  std::size_t pairs_per_market = 100;
  std::size_t grid_points = 4096;  // per market; resolution is derived from it
  double tol = kDefaultTolerance;  // for the floating routes
  RandomMarketShape shape;
};

struct PropertyReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::vector<std::string> examples;  // first few failure descriptions
  double worst = 0.0;                 // property-specific magnitude, see below

  bool passed() const { return failures == 0; }
};

struct PropertySuiteResult {
  std::vector<PropertyReport> reports;
  // Single-step upward closure is not a guaranteed property; violations are
  // counted here as findings rather than failures.
  std::size_t upward_closure_checks = 0;
  std::size_t upward_closure_findings = 0;
  std::size_t snap_failures = 0;
};

// Reports, in order:
//   meet-closure              meet feasible and meet_allocation feasible at it
//   demand-partition          J-set inclusions at the meet
//   revenue-dominance         worst = max grid revenue - revenue at p*
//   ce-efficiency             worst = max grid welfare - welfare at p*
//   method-agreement          worst = largest price discrepancy of the routes
//   minimality                1% reduction of any coordinate of p* infeasible
PropertySuiteResult run_property_suite(const PropertyOptions& options);

}  // namespace qfm
