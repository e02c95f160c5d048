#pragma once

// One seller, one buyer, one divisible good, concave valuation. Compares the
// market-clearing price with the revenue-maximising one.

#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace qfm {

inline constexpr double kInfiniteBudget = std::numeric_limits<double>::infinity();

struct ConcaveValuation {
  std::string name;
  std::function<double(double)> value;       // v(x), money
  std::function<double(double)> derivative;  // v'(x), money per unit; nonincreasing
  // m with |v'(x) - v'(y)| >= m |x - y|, trusted from the caller. Linear
  // valuations carry 0.
  std::optional<double> strong_concavity;
  // Set for v(x) = c x; demand is then a whole interval at p = c.
  std::optional<double> linear_value;
};

// v(x) = 4 / ln 2 (1 - 2^-x), v'(x) = 4 2^-x. Strong concavity holds with
// m = 4 ln 2 2^-x_max on [0, x_max]; the default covers [0, 3].
ConcaveValuation example_a1(double x_max = 3.0);

ConcaveValuation linear_valuation(double value_per_unit);

// "example-a1" or "linear:<v>". Throws std::invalid_argument otherwise.
ConcaveValuation parse_valuation(const std::string& spec);

struct MonopolyInstance {
  ConcaveValuation valuation;
  double supply = 0.0;
  double budget = kInfiniteBudget;
};

// min(x with v'(x) = p, budget / p); zero when v'(0) < p. For linear
// valuations at p = v the largest demanded quantity is returned. Throws
// InvariantError if v' is seen increasing, std::domain_error for p <= 0.
double demand_single(const MonopolyInstance& instance, double price);

// Price at which demand equals supply: min(v'(s), budget / s). Throws
// std::domain_error for negative or non-finite supply.
double clearing_price(const MonopolyInstance& instance);

struct RevenuePoint {
  double price = 0.0;
  double quantity = 0.0;
  double revenue = 0.0;
};

// Revenue p * min(demand(p), s) at a price.
RevenuePoint revenue_at(const MonopolyInstance& instance, double price);

// Golden-section search over [clearing price, v'(0)], then the least price
// attaining the maximum (revenue is flat above the clearing price whenever
// the budget binds).
RevenuePoint max_revenue_price(const MonopolyInstance& instance, double tol);

// Smallest x > 0 with x v'(x) = budget, if any.
std::optional<double> budget_exhaustion_quantity(const ConcaveValuation& valuation, double budget,
                                                 double tol = 1e-12);

struct DivergenceWitness {
  double supply = 0.0;
  double epsilon = 0.0;
  double revenue_at_supply = 0.0;   // min(s v'(s), budget)
  double revenue_at_reduced = 0.0;  // same at s - epsilon; strictly larger
  bool supply_condition = false;    // v'(s) < m s
  bool budget_condition = false;    // m > v'(x~) / x~, finite budgets only
  std::optional<double> exhaustion_quantity;  // x~
};

// Searches supplies upward (starting at `supply_hint` when given) for one
// with v'(s) < m s, sets epsilon = (m s - v'(s)) / (2 m) and keeps the first
// whose reduced quantity strictly raises revenue. Requires m; returns none
// for m <= 0 or when nothing is found below `search_limit`.
std::optional<DivergenceWitness> divergence_witness(const ConcaveValuation& valuation, double budget,
                                                    std::optional<double> supply_hint = std::nullopt,
                                                    double search_limit = 1e6);

}  // namespace qfm
