#include "qfm/monopoly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qfm/errors.hpp"

namespace qfm {

ConcaveValuation example_a1(double x_max) {
  const double scale = 4.0 / std::log(2.0);
  ConcaveValuation v;
  v.name = "example-a1";
  v.value = [scale](double x) { return scale * (1.0 - std::exp2(-x)); };
  v.derivative = [](double x) { return 4.0 * std::exp2(-x); };
  v.strong_concavity = 4.0 * std::log(2.0) * std::exp2(-x_max);
  return v;
}

ConcaveValuation linear_valuation(double value_per_unit) {
  if (!(value_per_unit > 0.0) || !std::isfinite(value_per_unit))
    throw std::invalid_argument("linear valuation needs a positive finite value");
  ConcaveValuation v;
  v.name = "linear:" + std::to_string(value_per_unit);
  v.value = [value_per_unit](double x) { return value_per_unit * x; };
  v.derivative = [value_per_unit](double) { return value_per_unit; };
  v.strong_concavity = 0.0;
  v.linear_value = value_per_unit;
  return v;
}

ConcaveValuation parse_valuation(const std::string& spec) {
  if (spec == "example-a1") return example_a1();
  const std::string prefix = "linear:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string number = spec.substr(prefix.size());
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size()) throw std::invalid_argument("bad linear valuation '" + spec + "'");
    return linear_valuation(value);
  }
  throw std::invalid_argument("unknown valuation '" + spec + "' (expected example-a1 or linear:<v>)");
}

namespace {

// Solves v'(x) = p for nonincreasing v', given v'(0) > p.
double invert_derivative(const ConcaveValuation& valuation, double price, double cap) {
  const auto& dv = valuation.derivative;
  double lo = 0.0;
  double hi = 1.0;
  double d_lo = dv(lo);
  while (dv(hi) > price) {
    if (dv(hi) > d_lo * (1.0 + 1e-12) + 1e-300) throw InvariantError("v' increases; valuation is not concave");
    lo = hi;
    hi *= 2.0;
    if (hi > cap) {
      // Demand beyond the cap is never used; the root may still lie below it.
      if (dv(cap) > price) return cap;
      hi = cap;
      break;
    }
  }
  double d_hi = dv(hi);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d_mid = dv(mid);
    if (d_mid > dv(lo) * (1.0 + 1e-12) + 1e-300 || d_mid < d_hi * (1.0 - 1e-12) - 1e-300)
      throw InvariantError("v' is not monotone; valuation is not concave");
    if (d_mid > price) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  (void)d_lo;
  return 0.5 * (lo + hi);
}

}  // namespace

double demand_single(const MonopolyInstance& instance, double price) {
  if (!(price > 0.0)) throw std::domain_error("undefined ratio");
  const auto& valuation = instance.valuation;
  const double affordable = std::isinf(instance.budget) ? kInfiniteBudget : instance.budget / price;
  if (valuation.linear_value) {
    if (price > *valuation.linear_value) return 0.0;
    return affordable;
  }
  if (!(valuation.derivative(0.0) > price)) return 0.0;
  const double cap = std::isinf(affordable) ? 1e300 : affordable;
  return std::min(invert_derivative(valuation, price, cap), affordable);
}

double clearing_price(const MonopolyInstance& instance) {
  const double s = instance.supply;
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("supply must be finite and nonnegative");
  double price = instance.valuation.derivative(s);
  if (s > 0.0 && !std::isinf(instance.budget)) price = std::min(price, instance.budget / s);
  return price;
}

RevenuePoint revenue_at(const MonopolyInstance& instance, double price) {
  RevenuePoint out;
  out.price = price;
  out.quantity = std::min(demand_single(instance, price), instance.supply);
  out.revenue = price * out.quantity;
  return out;
}

RevenuePoint max_revenue_price(const MonopolyInstance& instance, double tol) {
  const double lo_end = clearing_price(instance);
  const double hi_end = std::max(lo_end, instance.valuation.derivative(0.0));
  if (!(lo_end > 0.0)) return revenue_at(instance, hi_end);
  auto r = [&](double p) { return revenue_at(instance, p).revenue; };

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo_end, b = hi_end;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double rc = r(c), rd = r(d);
  const double width = std::max(tol, 1e-15) * std::max(1.0, hi_end);
  while (b - a > width) {
    if (rc >= rd) {
      b = d;
      d = c;
      rd = rc;
      c = b - ratio * (b - a);
      rc = r(c);
    } else {
      a = c;
      c = d;
      rc = rd;
      d = a + ratio * (b - a);
      rd = r(d);
    }
  }
  double best_price = rc >= rd ? c : d;
  for (double p : {lo_end, hi_end, a, b})
    if (r(p) > r(best_price)) best_price = p;
  const double best = r(best_price);
  // Revenue is min(p x(p), budget, p s), flat only where the budget binds.
  // A smooth maximum must not be shifted by the plateau threshold below.
  if (!(best >= instance.budget * (1.0 - 1e-12))) return revenue_at(instance, best_price);

  // Least price reaching the maximum; revenue rises up to the plateau.
  const double threshold = best - 1e-12 * std::max(1.0, std::abs(best));
  double lo = lo_end, hi = best_price;
  if (r(lo) >= threshold) return revenue_at(instance, lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (r(mid) >= threshold) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return revenue_at(instance, hi);
}

std::optional<double> budget_exhaustion_quantity(const ConcaveValuation& valuation, double budget,
                                                 double tol) {
  if (!(budget > 0.0) || std::isinf(budget)) return std::nullopt;
  auto excess = [&](double x) { return x * valuation.derivative(x) - budget; };
  double lo = 0.0;
  double hi = 1e-3;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::nullopt;
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (std::abs(excess(hi)) <= tol * std::max(1.0, budget) && hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return hi;
}

std::optional<DivergenceWitness> divergence_witness(const ConcaveValuation& valuation, double budget,
                                                    std::optional<double> supply_hint, double search_limit) {
  if (!valuation.strong_concavity || !(*valuation.strong_concavity > 0.0)) return std::nullopt;
  const double m = *valuation.strong_concavity;
  const auto& dv = valuation.derivative;
  auto capped = [&](double quantity) { return std::min(quantity * dv(quantity), budget); };

  std::optional<double> exhaustion = budget_exhaustion_quantity(valuation, budget);
  const bool budget_condition = exhaustion && *exhaustion > 0.0 && m > dv(*exhaustion) / *exhaustion;

  auto try_supply = [&](double s) -> std::optional<DivergenceWitness> {
    if (!(dv(s) < m * s)) return std::nullopt;
    const double eps = (m * s - dv(s)) / (2.0 * m);
    if (!(eps > 0.0) || !(eps < s)) return std::nullopt;
    DivergenceWitness w;
    w.supply = s;
    w.epsilon = eps;
    w.revenue_at_supply = capped(s);
    w.revenue_at_reduced = capped(s - eps);
    if (!(w.revenue_at_reduced > w.revenue_at_supply)) return std::nullopt;
    w.supply_condition = true;
    w.budget_condition = budget_condition;
    w.exhaustion_quantity = exhaustion;
    return w;
  };

  if (supply_hint && *supply_hint > 0.0) {
    if (auto w = try_supply(*supply_hint)) return w;
  }
  for (double s = 1e-3; s <= search_limit; s *= 1.25) {
    if (auto w = try_supply(s)) return w;
  }
  return std::nullopt;
}

}  // namespace qfm
