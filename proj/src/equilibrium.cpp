#include "qfm/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qfm {

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

struct TieStructure {
  std::vector<std::vector<std::size_t>> demanded;  // per buyer, goods in J
  std::vector<bool> money;                         // per buyer
};

TieStructure read_ties(const ExactMarket& market, const PriceVector<double>& approx, double band) {
  TieStructure ties;
  for (const auto& b : market.buyers) {
    std::vector<std::size_t> goods;
    bool money = false;
    if (b.budget > 0) {
      double best = 1.0;
      for (std::size_t j = 0; j < approx.size(); ++j) best = std::max(best, to_double(b.values[j]) / approx[j]);
      money = 1.0 >= (1.0 - band) * best;
      for (std::size_t j = 0; j < approx.size(); ++j) {
        const double ratio = to_double(b.values[j]) / approx[j];
        if (ratio > 0.0 && ratio >= (1.0 - band) * best) goods.push_back(j);
      }
    }
    ties.demanded.push_back(std::move(goods));
    ties.money.push_back(money);
  }
  return ties;
}

std::optional<PriceVector<Rational>> candidate_from_ties(const ExactMarket& market, const TieStructure& ties) {
  const std::size_t n = market.num_goods();
  DisjointSets sets(n);
  for (const auto& goods : ties.demanded) {
    for (std::size_t k = 1; k < goods.size(); ++k) sets.unite(goods[0], goods[k]);
  }
  // Relative prices within each component, propagated along tie edges.
  std::vector<std::optional<Rational>> base(n);
  for (std::size_t root = 0; root < n; ++root) {
    if (sets.find(root) != root) continue;
    std::size_t seed = n;
    for (std::size_t j = 0; j < n && seed == n; ++j)
      if (sets.find(j) == root) seed = j;
    base[seed] = Rational(1);
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i = 0; i < market.num_buyers(); ++i) {
        const auto& goods = ties.demanded[i];
        auto known = std::find_if(goods.begin(), goods.end(), [&](std::size_t j) { return base[j].has_value(); });
        if (known == goods.end() || sets.find(*known) != root) continue;
        const auto& v = market.buyers[i].values;
        for (std::size_t j : goods) {
          if (!base[j]) {
            base[j] = *base[*known] * v[j] / v[*known];
            grew = true;
          }
        }
      }
    }
  }
  PriceVector<Rational> prices(n);
  std::vector<bool> done(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (sets.find(root) != root) continue;
    std::optional<Rational> scale;
    Rational budget(0);
    Rational value(0);
    bool demanded = false;
    for (std::size_t i = 0; i < market.num_buyers() && !scale; ++i) {
      const auto& goods = ties.demanded[i];
      if (goods.empty() || sets.find(goods[0]) != root) continue;
      demanded = true;
      if (ties.money[i]) scale = market.buyers[i].values[goods[0]] / *base[goods[0]];
      budget += market.buyers[i].budget;
    }
    if (!demanded) return std::nullopt;
    if (!scale) {
      for (std::size_t j = 0; j < n; ++j)
        if (sets.find(j) == root) value += *base[j] * market.goods[j].supply;
      if (!(value > 0)) return std::nullopt;
      scale = budget / value;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (sets.find(j) != root) continue;
      if (!base[j]) return std::nullopt;
      prices[j] = *base[j] * *scale;
      done[j] = true;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!done[j] || !(prices[j] > 0)) return std::nullopt;
  return prices;
}

double max_relative_gap(const PriceVector<double>& a, const PriceVector<double>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(b[j])));
  return worst;
}

struct Routes {
  EGSolution eg;
  DescentTrace<double> descent;
  double agreement = 0.0;
  bool agreement_by_snap = false;
};

// `exact` is the market the snap is verified against.
Routes run_routes(const Market& market, const ExactMarket& exact, const SolveOptions& options) {
  Routes routes;
  routes.eg = solve_eg(market, options.tol, options.max_iterations);
  DescentOptions<double> descent_options;
  descent_options.tol = options.tol;
  descent_options.terminal_step = options.tol;
  routes.descent = lattice_descent(market, initial_feasible_price(market), descent_options);
  routes.agreement = max_relative_gap(routes.eg.prices, routes.descent.final_price);
  const double bound = 10.0 * options.tol;
  if (routes.agreement > bound) {
    // Barrier iterates converge like sqrt(1 / tau) when a buyer is tied at
    // price = value yet receives nothing, which caps the convex route near
    // 1e-7 in double precision. Each route is then snapped on its own; two
    // verified snaps coincide by uniqueness of the clearing price.
    const auto from_eg = snap_to_equilibrium(exact, routes.eg.prices);
    const auto from_descent = snap_to_equilibrium(exact, routes.descent.final_price);
    routes.agreement_by_snap = from_eg && from_descent && *from_eg == *from_descent;
  }
  // Without exact confirmation, degenerate instances are held to the
  // coarser kDegenerateAgreement.
  if (routes.agreement > bound && !routes.agreement_by_snap && routes.agreement > kDegenerateAgreement) {
    std::ostringstream what;
    what << "convex program and lattice descent disagree by " << routes.agreement << " (bound "
         << std::max(bound, kDegenerateAgreement) << ")";
    throw MethodDisagreement(what.str(), routes.agreement, std::move(routes.eg), std::move(routes.descent));
  }
  return routes;
}

template <class T>
void finish(const BasicMarket<T>& market, EquilibriumResult<T>& result, const T& tol) {
  if (!result.clearing.feasible) {
    // Unsnapped descent prices sit a hair above p*; report the
    // revenue-maximal allocation there.
    auto fallback = check_feasible(market, result.p_star, tol);
    result.allocation = fallback.allocation.value_or(
        Allocation<T>(market.num_buyers(), Bundle<T>(market.num_goods(), T(0))));
  } else {
    result.allocation = *result.clearing.allocation;
  }
  Outcome<T> outcome{result.p_star, result.allocation};
  result.revenue = revenue(outcome);
  result.welfare = social_welfare(market, result.allocation);
  result.efficiency = certify_constrained_efficiency(market, outcome, {}, tol);
}

}  // namespace

std::optional<PriceVector<Rational>> snap_to_equilibrium(const ExactMarket& market,
                                                         const PriceVector<double>& approx) {
  if (approx.size() != market.num_goods()) return std::nullopt;
  for (double p : approx)
    if (!(p > 0.0) || !std::isfinite(p)) return std::nullopt;
  std::vector<std::vector<std::vector<std::size_t>>> seen;
  for (double band = 1e-3; band >= 1e-12; band /= 10.0) {
    auto ties = read_ties(market, approx, band);
    if (std::find(seen.begin(), seen.end(), ties.demanded) != seen.end()) continue;
    seen.push_back(ties.demanded);
    auto candidate = candidate_from_ties(market, ties);
    if (!candidate) continue;
    if (check_clearing(market, *candidate, Rational(0)).feasible) return candidate;
  }
  return std::nullopt;
}

EquilibriumResult<double> solve(const Market& market, const SolveOptions& options) {
  require_valid(market);
  const auto exact = market_cast<Rational>(market);
  Routes routes = run_routes(market, exact, options);
  EquilibriumResult<double> result;
  result.method_agreement = routes.agreement;
  result.agreement_by_snap = routes.agreement_by_snap;
  if (options.snap) {
    auto p = snap_to_equilibrium(exact, routes.descent.final_price);
    if (!p) p = snap_to_equilibrium(exact, routes.eg.prices);
    if (p) {
      auto clearing = check_clearing(exact, *p, Rational(0));
      result.p_star = vector_cast<double>(*p);
      result.snapped = true;
      result.clearing.feasible = true;
      result.clearing.allocation = allocation_cast<double>(*clearing.allocation);
      result.clearing.revenue = to_double(clearing.revenue);
    }
  }
  if (!result.snapped) {
    result.p_star = routes.descent.final_price;
    result.clearing = check_clearing(market, result.p_star, options.tol);
  }
  finish(market, result, options.tol);
  result.eg = std::move(routes.eg);
  result.descent = std::move(routes.descent);
  return result;
}

EquilibriumResult<Rational> solve_exact(const ExactMarket& market, const SolveOptions& options) {
  require_valid(market);
  Routes routes = run_routes(market_cast<double>(market), market, options);
  EquilibriumResult<Rational> result;
  result.method_agreement = routes.agreement;
  result.agreement_by_snap = routes.agreement_by_snap;
  std::optional<PriceVector<Rational>> p;
  if (options.snap) p = snap_to_equilibrium(market, routes.descent.final_price);
  if (!p && options.snap) p = snap_to_equilibrium(market, routes.eg.prices);
  if (p) {
    result.p_star = *p;
    result.snapped = true;
  } else {
    result.p_star = vector_cast<Rational>(routes.descent.final_price);
  }
  result.clearing = check_clearing(market, result.p_star, Rational(0));
  finish(market, result, Rational(0));
  result.eg = std::move(routes.eg);
  result.descent = std::move(routes.descent);
  return result;
}

}  // namespace qfm
