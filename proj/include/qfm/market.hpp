#pragma once

// Market model for budget-constrained quasi-linear buyers with linear
// valuations. Money is the implicit good with price and per-unit value 1; it
// never appears in the vectors below.

#include <cstddef>
#include <string>
#include <vector>

#include "qfm/errors.hpp"
#include "qfm/rational.hpp"

namespace qfm {

enum class NumericMode { exact, floating };

template <class T>
struct Good {
  std::string name;
  T supply{};
};

template <class T>
struct Buyer {
  std::string name;
  std::vector<T> values;  // money per unit, one entry per good
  T budget{};
};

template <class T>
struct BasicMarket {
  std::vector<Good<T>> goods;
  std::vector<Buyer<T>> buyers;

  std::size_t num_goods() const { return goods.size(); }
  std::size_t num_buyers() const { return buyers.size(); }
  std::vector<T> supply() const;
};

using Market = BasicMarket<double>;
using ExactMarket = BasicMarket<Rational>;

template <class T>
using PriceVector = std::vector<T>;
template <class T>
using Bundle = std::vector<T>;
template <class T>
using Allocation = std::vector<Bundle<T>>;

template <class T>
struct Outcome {
  PriceVector<T> prices;
  Allocation<T> allocation;
};

// Goods maximising v_j / p_j over goods and money. `money` is set when the
// maximal ratio is 1 (within tolerance), i.e. keeping money is optimal.
template <class T>
struct BangPerBuckSet {
  std::size_t buyer = 0;
  bool money = false;
  std::vector<std::size_t> goods;
  T max_ratio{};

  bool contains(std::size_t good) const;
  bool empty_of_goods() const { return goods.empty(); }
};

// Default relative tolerance for float mode.
inline constexpr double kDefaultTolerance = 1e-9;

template <class U, class T>
BasicMarket<U> market_cast(const BasicMarket<T>& market) {
  BasicMarket<U> out;
  out.goods.reserve(market.goods.size());
  for (const auto& g : market.goods) {
    if constexpr (std::is_same_v<T, Rational>) {
      out.goods.push_back({g.name, from_rational<U>(g.supply)});
    } else {
      out.goods.push_back({g.name, from_double<U>(g.supply)});
    }
  }
  out.buyers.reserve(market.buyers.size());
  for (const auto& b : market.buyers) {
    Buyer<U> nb{b.name, {}, {}};
    nb.values.reserve(b.values.size());
    for (const auto& v : b.values) {
      if constexpr (std::is_same_v<T, Rational>) {
        nb.values.push_back(from_rational<U>(v));
      } else {
        nb.values.push_back(from_double<U>(v));
      }
    }
    if constexpr (std::is_same_v<T, Rational>) {
      nb.budget = from_rational<U>(b.budget);
    } else {
      nb.budget = from_double<U>(b.budget);
    }
    out.buyers.push_back(std::move(nb));
  }
  return out;
}

template <class U, class T>
std::vector<U> vector_cast(const std::vector<T>& values) {
  std::vector<U> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if constexpr (std::is_same_v<T, U>) {
      out.push_back(v);
    } else if constexpr (std::is_same_v<T, Rational>) {
      out.push_back(from_rational<U>(v));
    } else {
      out.push_back(from_double<U>(v));
    }
  }
  return out;
}

template <class U, class T>
Allocation<U> allocation_cast(const Allocation<T>& allocation) {
  Allocation<U> out;
  out.reserve(allocation.size());
  for (const auto& bundle : allocation) out.push_back(vector_cast<U>(bundle));
  return out;
}

// Empty iff every invariant holds. Beyond shape and sign checks, each good
// must be valued positively by at least one buyer with a positive budget;
// otherwise no positive minimal price exists for it.
template <class T>
std::vector<Violation> validate_market(const BasicMarket<T>& market);

// Throws ValidationError when validate_market reports anything.
template <class T>
void require_valid(const BasicMarket<T>& market);

// Removes goods nobody values; the caller decides when that is appropriate.
template <class T>
BasicMarket<T> strip_worthless_goods(const BasicMarket<T>& market);

// j is in the set iff v_j / p_j >= (1 - tol) * max_ratio. Pass tol = 0 for
// exact arithmetic. Throws std::domain_error("undefined ratio") on a
// nonpositive price.
template <class T>
BangPerBuckSet<T> bang_per_buck(const Buyer<T>& buyer, const PriceVector<T>& prices,
                                const T& tol);

// Extreme points of the demand set: budget / p_j units of each tied good,
// plus the zero bundle when money is tied.
template <class T>
std::vector<Bundle<T>> demand_vertices(const Buyer<T>& buyer, const PriceVector<T>& prices,
                                       const T& tol);

template <class T>
bool is_demanded(const Buyer<T>& buyer, const PriceVector<T>& prices, const Bundle<T>& bundle,
                 const T& tol);

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b);

}  // namespace qfm
