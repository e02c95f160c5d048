#pragma once

// Monotone descent inside the feasible region towards its elementwise
// minimum. Moves multiply a subset of coordinates by (1 - step) and are kept
// only when the result is feasible, so every iterate is feasible.
//
// Single-coordinate moves are not enough: at a point where every good is
// over-demanded as soon as its price alone drops, only a joint reduction
// makes progress. Feasible subset moves are closed under union (meet of the
// two reduced vectors), and scaling a feasible vector up is feasible, so at
// any feasible p != p* the goods maximising p_j / p*_j admit a joint
// reduction. The descent therefore tries the full set, then sets obtained by
// discarding over-demand witnesses, then (for few goods) every subset.

#include <cstddef>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

template <class T>
struct DescentStep {
  std::vector<std::size_t> goods;  // coordinates reduced together
  T step{};                        // relative reduction applied
  PriceVector<T> before;
  PriceVector<T> after;
  bool feasible = true;  // verdict of check_feasible at `after`
};

template <class T>
struct DescentTrace {
  PriceVector<T> start;
  std::vector<DescentStep<T>> steps;  // accepted moves only
  PriceVector<T> final_price;
  T terminal_step{};
  std::size_t feasibility_checks = 0;
  std::size_t rejected_moves = 0;
};

template <class T>
struct DescentOptions {
  T initial_step = T(1) / T(2);
  T terminal_step = T(1) / T(1'000'000'000);
  T tol = T(0);  // tie tolerance handed to check_feasible
  // Every nonempty subset is tried before shrinking the step when the
  // market has at most this many goods.
  std::size_t exhaustive_goods = 10;
};

// p0_j = max_i v_ij + 1: every buyer demands only money there.
template <class T>
PriceVector<T> initial_feasible_price(const BasicMarket<T>& market);

// Throws PreconditionError when p0 is infeasible.
template <class T>
DescentTrace<T> lattice_descent(const BasicMarket<T>& market, const PriceVector<T>& p0,
                                const DescentOptions<T>& options);

}  // namespace qfm
