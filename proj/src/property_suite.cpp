#include "qfm/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfm/equilibrium.hpp"
#include "qfm/feasibility.hpp"
#include "qfm/format.hpp"
#include "qfm/oracle.hpp"

namespace qfm {

namespace {

constexpr std::size_t kExamplesKept = 5;

PropertyReport named(std::string name) {
  PropertyReport report;
  report.name = std::move(name);
  return report;
}

void record(PropertyReport& report, bool ok, const std::string& what) {
  ++report.cases;
  if (ok) return;
  ++report.failures;
  if (report.examples.size() < kExamplesKept) report.examples.push_back(what);
}

std::string describe(const PriceVector<Rational>& p) {
  std::string out = "(";
  for (std::size_t j = 0; j < p.size(); ++j) out += (j ? ", " : "") + to_string(p[j]);
  return out + ")";
}

Rational draw(std::mt19937_64& rng, const RandomMarketShape& shape) {
  std::uniform_int_distribution<long> top(1, shape.max_numerator);
  std::uniform_int_distribution<long> bottom(1, shape.max_denominator);
  return Rational(top(rng)) / Rational(bottom(rng));
}

std::size_t pick(std::mt19937_64& rng, std::size_t low, std::size_t high) {
  return std::uniform_int_distribution<std::size_t>(low, high)(rng);
}

bool subset_of(const BangPerBuckSet<Rational>& inner, const BangPerBuckSet<Rational>& outer) {
  if (inner.money && !outer.money) return false;
  return std::all_of(inner.goods.begin(), inner.goods.end(), [&](std::size_t j) { return outer.contains(j); });
}

// Demand-set inclusions for every buyer at r = p ^ q.
bool demand_partition_holds(const ExactMarket& market, const PriceVector<Rational>& p,
                            const PriceVector<Rational>& q, const PriceVector<Rational>& r) {
  const Rational zero(0);
  for (const auto& buyer : market.buyers) {
    const auto at_p = bang_per_buck(buyer, p, zero);
    const auto at_q = bang_per_buck(buyer, q, zero);
    const auto at_r = bang_per_buck(buyer, r, zero);
    for (std::size_t j : at_r.goods) {
      if (p[j] < q[j]) {
        if (!at_p.contains(j) || !subset_of(at_p, at_r)) return false;
      } else {
        if (!subset_of(at_q, at_r)) return false;
        for (std::size_t k : at_q.goods)
          if (p[k] < q[k]) return false;
      }
    }
  }
  return true;
}

}  // namespace

ExactMarket random_market(std::mt19937_64& rng, const RandomMarketShape& shape) {
  while (true) {
    ExactMarket market;
    const std::size_t n = pick(rng, 1, shape.max_goods);
    const std::size_t m = pick(rng, 1, shape.max_buyers);
    for (std::size_t j = 0; j < n; ++j) market.goods.push_back({"g" + std::to_string(j + 1), draw(rng, shape)});
    std::bernoulli_distribution zero_value(0.3);
    for (std::size_t i = 0; i < m; ++i) {
      Buyer<Rational> b{"b" + std::to_string(i + 1), {}, draw(rng, shape)};
      for (std::size_t j = 0; j < n; ++j) b.values.push_back(zero_value(rng) ? Rational(0) : draw(rng, shape));
      market.buyers.push_back(std::move(b));
    }
    if (validate_market(market).empty()) return market;
  }
}

PropertySuiteResult run_property_suite(const PropertyOptions& options) {
  PropertySuiteResult result;
  PropertyReport meet = named("meet-closure");
  PropertyReport partition = named("demand-partition");
  PropertyReport dominance = named("revenue-dominance");
  PropertyReport efficiency = named("ce-efficiency");
  PropertyReport agreement = named("method-agreement");
  PropertyReport minimality = named("minimality");
  dominance.worst = -std::numeric_limits<double>::infinity();
  efficiency.worst = -std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(options.seed);
  const Rational zero(0);
  for (std::size_t k = 0; k < options.markets; ++k) {
    const ExactMarket market = random_market(rng, options.shape);
    const std::string tag = "market " + std::to_string(k);
    SolveOptions solve_options;
    solve_options.tol = options.tol;

    EquilibriumResult<Rational> eq;
    try {
      eq = solve_exact(market, solve_options);
    } catch (const MethodDisagreement& e) {
      agreement.worst = std::max(agreement.worst, e.discrepancy());
      record(agreement, false, tag + ": " + e.what());
      continue;
    }
    agreement.worst = std::max(agreement.worst, eq.method_agreement);
    record(agreement, eq.method_agreement <= 1e-5, tag + ": discrepancy " + format_number(eq.method_agreement));
    if (!eq.snapped) ++result.snap_failures;
    const PriceVector<Rational>& p_star = eq.p_star;

    for (std::size_t j = 0; j < p_star.size(); ++j) {
      PriceVector<Rational> lowered = p_star;
      lowered[j] = lowered[j] * Rational(99, 100);
      record(minimality, !check_feasible(market, lowered, zero).feasible,
             tag + ": lowering good " + std::to_string(j) + " of " + describe(p_star) + " stays feasible");
    }

    // Window from half of p* up to where only money is demanded.
    const std::size_t n = market.num_goods();
    std::vector<PriceWindow> bounds;
    for (std::size_t j = 0; j < n; ++j) {
      Rational top(0);
      for (const auto& b : market.buyers) top = std::max(top, b.values[j]);
      bounds.push_back({p_star[j] / 2, top + 1});
    }
    std::size_t resolution = 2;
    while (std::pow(static_cast<double>(resolution + 1), static_cast<double>(n)) <=
               static_cast<double>(options.grid_points) &&
           resolution < 64) {
      ++resolution;
    }
    const auto grid = grid_scan(market, bounds, resolution, zero);
    Rational widest_step(0);
    Rational total_supply(0);
    for (std::size_t j = 0; j < n; ++j) {
      widest_step = std::max(widest_step, grid.step(j));
      total_supply += market.goods[j].supply;
    }

    const Rational revenue_star = dot(p_star, market.supply());
    const Rational welfare_star = eq.welfare;
    std::vector<std::size_t> feasible;
    for (std::size_t index = 0; index < grid.size(); ++index) {
      if (!grid.feasible[index]) continue;
      feasible.push_back(index);
      const auto price = grid.price(index);

      const Rational revenue_gap = grid.revenue[index] - revenue_star;
      dominance.worst = std::max(dominance.worst, to_double(revenue_gap));
      record(dominance, revenue_gap <= widest_step * total_supply,
             tag + ": revenue " + to_string(grid.revenue[index]) + " at " + describe(price) + " exceeds " +
                 to_string(revenue_star));

      const Rational welfare_gap = grid.welfare[index] - welfare_star;
      efficiency.worst = std::max(efficiency.worst, to_double(welfare_gap));
      bool ok = to_double(welfare_gap) <= 1e-6;
      if (ok && to_double(welfare_gap) >= -1e-6) {
        // Near-efficient outcomes must sit at p* up to two grid steps.
        for (std::size_t j = 0; j < n; ++j) ok = ok && abs_value(Rational(price[j] - p_star[j])) <= 2 * grid.step(j);
        if (price == p_star) ok = ok && check_clearing(market, price, zero).feasible;
      }
      record(efficiency, ok,
             tag + ": welfare " + to_string(grid.welfare[index]) + " at " + describe(price) + " vs " +
                 to_string(welfare_star));

      const auto coords = grid.coordinates(index);
      for (std::size_t j = 0; j < n; ++j) {
        if (coords[j] + 1 >= resolution) continue;
        auto up = coords;
        ++up[j];
        ++result.upward_closure_checks;
        if (!grid.feasible[grid.index_of(up)]) ++result.upward_closure_findings;
      }
    }

    if (feasible.empty()) continue;
    std::uniform_int_distribution<std::size_t> any(0, feasible.size() - 1);
    for (std::size_t t = 0; t < options.pairs_per_market; ++t) {
      const auto p = grid.price(feasible[any(rng)]);
      const auto q = grid.price(feasible[any(rng)]);
      const auto x = check_feasible(market, p, zero);
      const auto y = check_feasible(market, q, zero);
      const auto r = qfm::meet(p, q);
      bool ok = x.feasible && y.feasible;
      if (ok) {
        ok = check_feasible(market, r, zero).feasible;
        const auto z = meet_allocation(market, p, q, *x.allocation, *y.allocation, zero);
        ok = ok && is_feasible_outcome(market, Outcome<Rational>{r, z}, zero);
      }
      record(meet, ok, tag + ": meet of " + describe(p) + " and " + describe(q));
      record(partition, demand_partition_holds(market, p, q, r),
             tag + ": demand partition at meet of " + describe(p) + " and " + describe(q));
    }
  }
  result.reports = {meet, partition, dominance, efficiency, agreement, minimality};
  return result;
}

}  // namespace qfm
