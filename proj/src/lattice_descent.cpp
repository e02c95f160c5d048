#include "qfm/lattice_descent.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <set>

#include "qfm/feasibility.hpp"

namespace qfm {

template <class T>
PriceVector<T> initial_feasible_price(const BasicMarket<T>& market) {
  PriceVector<T> p(market.num_goods(), T(0));
  for (const auto& b : market.buyers) {
    for (std::size_t j = 0; j < p.size() && j < b.values.size(); ++j) p[j] = std::max(p[j], b.values[j]);
  }
  for (auto& x : p) x += T(1);
  return p;
}

namespace {

template <class T>
class Descent {
 public:
  Descent(const BasicMarket<T>& market, const DescentOptions<T>& options, DescentTrace<T>& trace)
      : market_(market), options_(options), trace_(trace) {}

  // Tries candidate subsets at the given step; applies the first feasible one.
  bool try_step(PriceVector<T>& p, const T& step) {
    const std::size_t n = p.size();
    std::set<std::vector<std::size_t>> tried;

    std::vector<std::size_t> subset(n);
    for (std::size_t j = 0; j < n; ++j) subset[j] = j;
    // Witness-guided shrinking: goods of an over-demand witness cannot all
    // stay in the reduced set.
    while (!subset.empty() && tried.insert(subset).second) {
      auto trial = reduced(p, subset, T(1) - step);
      auto cert = check_feasible(market_, trial, options_.tol);
      ++trace_.feasibility_checks;
      if (cert.feasible) return accept(p, std::move(trial), subset, step);
      ++trace_.rejected_moves;
      if (attempt_event(p, subset, step)) return true;
      std::vector<std::size_t> next;
      for (std::size_t j : subset) {
        if (std::find(cert.witness.begin(), cert.witness.end(), j) == cert.witness.end()) next.push_back(j);
      }
      if (next.size() == subset.size()) break;
      subset = std::move(next);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (attempt(p, {j}, step, tried)) return true;
    }
    if (n <= options_.exhaustive_goods) {
      const std::size_t limit = std::size_t{1} << n;
      for (std::size_t mask = limit - 1; mask >= 1; --mask) {
        std::vector<std::size_t> s;
        for (std::size_t j = 0; j < n; ++j)
          if (mask & (std::size_t{1} << j)) s.push_back(j);
        if (attempt(p, s, step, tried)) return true;
      }
    }
    return false;
  }

 private:
  PriceVector<T> reduced(const PriceVector<T>& p, const std::vector<std::size_t>& subset,
                         const T& factor) const {
    PriceVector<T> out = p;
    for (std::size_t j : subset) out[j] = p[j] * factor;
    return out;
  }

  bool attempt(PriceVector<T>& p, const std::vector<std::size_t>& subset, const T& step,
               std::set<std::vector<std::size_t>>& tried) {
    if (!tried.insert(subset).second) return false;
    auto trial = reduced(p, subset, T(1) - step);
    ++trace_.feasibility_checks;
    if (is_feasible_price_unchecked(market_, trial, options_.tol))
      return accept(p, std::move(trial), subset, step);
    ++trace_.rejected_moves;
    return attempt_event(p, subset, step);
  }

  // Largest factor below one at which scaling `subset` creates a new tie for
  // some buyer, either with a good outside the subset or with money. Near p*
  // the region narrows onto exact tie ratios that dyadic factors never hit.
  std::optional<T> next_event(const PriceVector<T>& p, const std::vector<std::size_t>& subset) const {
    std::vector<bool> inside(p.size(), false);
    for (std::size_t j : subset) inside[j] = true;
    // Ratios already inside the tie band count as tied.
    T ceiling = T(1) - options_.tol;
    if constexpr (!is_exact_v<T>) ceiling -= 16 * std::numeric_limits<double>::epsilon();
    std::optional<T> best;
    auto consider = [&](const T& factor) {
      if (factor > T(0) && factor < ceiling && (!best || factor > *best)) best = factor;
    };
    for (const auto& buyer : market_.buyers) {
      if (!(buyer.budget > T(0))) continue;
      for (std::size_t j : subset) {
        if (!(buyer.values[j] > T(0))) continue;
        consider(buyer.values[j] / p[j]);
        for (std::size_t k = 0; k < p.size(); ++k) {
          if (inside[k] || !(buyer.values[k] > T(0))) continue;
          consider(buyer.values[j] * p[k] / (buyer.values[k] * p[j]));
        }
      }
    }
    return best;
  }

  bool attempt_event(PriceVector<T>& p, const std::vector<std::size_t>& subset, const T& step) {
    const auto factor = next_event(p, subset);
    // Only events nearer than the dyadic step add anything.
    if (!factor || T(1) - *factor >= step) return false;
    auto trial = reduced(p, subset, *factor);
    ++trace_.feasibility_checks;
    if (is_feasible_price_unchecked(market_, trial, options_.tol))
      return accept(p, std::move(trial), subset, T(1) - *factor);
    ++trace_.rejected_moves;
    return false;
  }

  bool accept(PriceVector<T>& p, PriceVector<T> trial, const std::vector<std::size_t>& subset,
              const T& step) {
    trace_.steps.push_back({subset, step, p, trial, true});
    p = std::move(trial);
    return true;
  }

  const BasicMarket<T>& market_;
  const DescentOptions<T>& options_;
  DescentTrace<T>& trace_;
};

}  // namespace

template <class T>
DescentTrace<T> lattice_descent(const BasicMarket<T>& market, const PriceVector<T>& p0,
                                const DescentOptions<T>& options) {
  require_valid(market);
  if (p0.size() != market.num_goods()) throw PreconditionError("start price has wrong dimension");
  for (const auto& x : p0) {
    if (!(x > T(0))) throw PreconditionError("start price must be strictly positive");
  }
  if (!(options.terminal_step > T(0)) || !(options.initial_step < T(1)) ||
      options.terminal_step > options.initial_step) {
    throw PreconditionError("step schedule must satisfy 0 < terminal <= initial < 1");
  }
  if (!check_feasible(market, p0, options.tol).feasible)
    throw PreconditionError("lattice descent needs a feasible start price");

  DescentTrace<T> trace;
  trace.start = p0;
  trace.terminal_step = options.terminal_step;
  trace.feasibility_checks = 1;
  Descent<T> descent(market, options, trace);

  PriceVector<T> p = p0;
  T step = options.initial_step;
  while (true) {
    if (descent.try_step(p, step)) {
      // Grow back after a success so long plateaus are crossed quickly.
      step = std::min(step * T(2), options.initial_step);
    } else if (step > options.terminal_step) {
      // Halve, landing exactly on the terminal step so the last failed
      // sweep certifies termination.
      step = std::max(step / T(2), options.terminal_step);
    } else {
      break;
    }
  }
  trace.final_price = p;
  return trace;
}

template PriceVector<double> initial_feasible_price<double>(const BasicMarket<double>&);
template PriceVector<Rational> initial_feasible_price<Rational>(const BasicMarket<Rational>&);
template DescentTrace<double> lattice_descent<double>(const BasicMarket<double>&,
                                                      const PriceVector<double>&,
                                                      const DescentOptions<double>&);
template DescentTrace<Rational> lattice_descent<Rational>(const BasicMarket<Rational>&,
                                                          const PriceVector<Rational>&,
                                                          const DescentOptions<Rational>&);

}  // namespace qfm
