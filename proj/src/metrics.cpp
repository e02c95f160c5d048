#include "qfm/metrics.hpp"

#include <string>

#include "qfm/feasibility.hpp"

namespace qfm {

template <class T>
T revenue(const Outcome<T>& outcome) {
  T total(0);
  for (const auto& bundle : outcome.allocation) total += dot(outcome.prices, bundle);
  return total;
}

template <class T>
T social_welfare(const BasicMarket<T>& market, const Allocation<T>& allocation) {
  T total(0);
  for (std::size_t i = 0; i < market.num_buyers() && i < allocation.size(); ++i)
    total += dot(market.buyers[i].values, allocation[i]);
  return total;
}

double social_welfare(const ValuationOracle& valuation, const Allocation<double>& allocation) {
  double total = 0.0;
  for (std::size_t i = 0; i < allocation.size(); ++i) total += valuation(i, allocation[i]);
  return total;
}

template <class T>
bool is_competitive_equilibrium(const BasicMarket<T>& market, const Outcome<T>& outcome, const T& tol) {
  if (outcome.allocation.size() != market.num_buyers()) return false;
  if (!is_feasible_outcome(market, outcome, tol)) return false;
  const auto sold = aggregate(outcome.allocation, market.num_goods());
  for (std::size_t j = 0; j < market.num_goods(); ++j) {
    if (!(outcome.prices[j] > tol)) continue;
    const T supply = market.goods[j].supply;
    const T scale = supply > T(1) ? supply : T(1);
    if (abs_value(T(sold[j] - supply)) > tol * scale) return false;
  }
  return true;
}

template <class T>
EfficiencyCertificate<T> certify_constrained_efficiency(const BasicMarket<T>& market,
                                                        const Outcome<T>& outcome,
                                                        const std::vector<Outcome<T>>& challengers,
                                                        const T& tol) {
  for (std::size_t k = 0; k < challengers.size(); ++k) {
    if (challengers[k].allocation.size() != market.num_buyers() ||
        !is_feasible_outcome(market, challengers[k], tol)) {
      throw PreconditionError("challenger " + std::to_string(k) + " is not a feasible outcome");
    }
  }
  EfficiencyCertificate<T> cert;
  cert.welfare = social_welfare(market, outcome.allocation);
  cert.verdict = is_competitive_equilibrium(market, outcome, tol) ? EfficiencyVerdict::certified
                                                                   : EfficiencyVerdict::not_competitive;
  const auto subject_sold = aggregate(outcome.allocation, market.num_goods());
  T scale(1);
  for (const auto& b : market.buyers) scale += b.budget;
  for (const auto& challenger : challengers) {
    const auto challenger_sold = aggregate(challenger.allocation, market.num_goods());
    T payment_gap(0);
    for (std::size_t j = 0; j < market.num_goods(); ++j)
      payment_gap += outcome.prices[j] * (subject_sold[j] - challenger_sold[j]);
    T s = cert.welfare - social_welfare(market, challenger.allocation) - payment_gap;
    if (cert.slack.empty() || s < cert.min_slack) cert.min_slack = s;
    if (s < -tol * scale) cert.slacks_nonnegative = false;
    cert.slack.push_back(std::move(s));
  }
  return cert;
}

#define QFM_INSTANTIATE(T)                                                                         \
  template T revenue<T>(const Outcome<T>&);                                                        \
  template T social_welfare<T>(const BasicMarket<T>&, const Allocation<T>&);                       \
  template bool is_competitive_equilibrium<T>(const BasicMarket<T>&, const Outcome<T>&, const T&); \
  template EfficiencyCertificate<T> certify_constrained_efficiency<T>(                             \
      const BasicMarket<T>&, const Outcome<T>&, const std::vector<Outcome<T>>&, const T&);

QFM_INSTANTIATE(double)
QFM_INSTANTIATE(Rational)

#undef QFM_INSTANTIATE

}  // namespace qfm
