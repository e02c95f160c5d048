#pragma once

// Feasibility and market clearing of a fixed price vector, decided by a
// transportation flow: buyers send money to the goods in their bang-per-buck
// sets, goods absorb at most p_j * s_j. A buyer whose bang-per-buck set
// excludes money must route its whole budget ("strict"); one that includes
// money may route anything up to its budget ("flexible").

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

enum class BuyerClass { strict, flexible };

template <class T>
struct SpendingGraph {
  PriceVector<T> prices;
  std::vector<BangPerBuckSet<T>> demand;
  std::vector<BuyerClass> buyer_class;
  std::vector<T> budget;
  std::vector<T> capacity;  // money each good can absorb, p_j * s_j
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (buyer, good), buyer-major order
};

template <class T>
SpendingGraph<T> build_spending_graph(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                      const T& tol);

enum class WitnessKind {
  none,
  over_demand,  // strict buyers confined to `witness` need more money than it can absorb
  under_sold,   // even the revenue-maximal allocation leaves `witness` partly unsold
};

template <class T>
struct FeasibilityCertificate {
  bool feasible = false;
  std::optional<Allocation<T>> allocation;
  WitnessKind witness_kind = WitnessKind::none;
  std::vector<std::size_t> witness;
  T witness_excess{};  // money by which the witness condition is violated
  T revenue{};         // money spent under `allocation`
};

// Result of routing strict budgets first and then as much flexible money as
// fits. `revenue` is the largest revenue obtainable at these prices.
template <class T>
struct Extension {
  bool feasible = false;
  T strict_requirement{};
  T revenue{};
  Allocation<T> allocation;
  std::vector<T> sold_money;  // per good
};

template <class T>
Extension<T> max_extension(const BasicMarket<T>& market, const PriceVector<T>& prices, const T& tol);

// The returned allocation is the revenue-maximal one (strict buyers first).
template <class T>
FeasibilityCertificate<T> check_feasible(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                         const T& tol);

// `feasible` here means feasible and clearing. Decided by a circulation with
// lower bounds, independently of max_extension.
template <class T>
FeasibilityCertificate<T> check_clearing(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                         const T& tol);

// Unvalidated variants for hot loops; the caller has validated `market`.
template <class T>
bool is_feasible_price_unchecked(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                 const T& tol);

template <class T>
PriceVector<T> meet(const PriceVector<T>& p, const PriceVector<T>& q);

// Buyers demanding some good of B = {j : p_j >= q_j} at r = p ^ q take their
// bundle from y, everyone else from x. Both outcomes must be feasible.
template <class T>
Allocation<T> meet_allocation(const BasicMarket<T>& market, const PriceVector<T>& p,
                              const PriceVector<T>& q, const Allocation<T>& x,
                              const Allocation<T>& y, const T& tol);

// Supply respected and every bundle demanded at the prices.
template <class T>
bool is_feasible_outcome(const BasicMarket<T>& market, const Outcome<T>& outcome, const T& tol);

template <class T>
std::vector<T> aggregate(const Allocation<T>& allocation, std::size_t num_goods);

}  // namespace qfm
