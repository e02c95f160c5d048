#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

// Sum of payments p . x^i.
template <class T>
T revenue(const Outcome<T>& outcome);

// Sum of v^i . x^i for linear valuations.
template <class T>
T social_welfare(const BasicMarket<T>& market, const Allocation<T>& allocation);

// Value of a bundle to a buyer; lets non-linear valuations reuse the sums.
using ValuationOracle = std::function<double(std::size_t buyer, const Bundle<double>& bundle)>;

double social_welfare(const ValuationOracle& valuation, const Allocation<double>& allocation);

// Feasible outcome that sells the whole supply of every good priced above tol.
template <class T>
bool is_competitive_equilibrium(const BasicMarket<T>& market, const Outcome<T>& outcome, const T& tol);

enum class EfficiencyVerdict { certified, not_competitive };

template <class T>
struct EfficiencyCertificate {
  EfficiencyVerdict verdict = EfficiencyVerdict::not_competitive;
  T welfare{};
  // Per challenger y: W(x) - W(y) - p . (x - y), with (p, x) the subject.
  // A competitive equilibrium makes every entry nonnegative.
  std::vector<T> slack;
  T min_slack{};
  bool slacks_nonnegative = true;  // all entries >= -tol
};

// The certificate is the equilibrium check itself; challenger slacks are
// supporting evidence. Throws PreconditionError naming the first challenger
// that is not a feasible outcome.
template <class T>
EfficiencyCertificate<T> certify_constrained_efficiency(const BasicMarket<T>& market,
                                                        const Outcome<T>& outcome,
                                                        const std::vector<Outcome<T>>& challengers,
                                                        const T& tol);

}  // namespace qfm
