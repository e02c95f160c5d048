#include "qfm/market.hpp"

#include <algorithm>
#include <stdexcept>

namespace qfm {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::string out = "invalid market:";
  for (const auto& v : violations) out += " [" + v.entity + ": " + v.rule + "]";
  return out;
}

std::string indexed(const char* kind, std::size_t i) {
  return std::string(kind) + "[" + std::to_string(i) + "]";
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(summarize(violations)), violations_(std::move(violations)) {}

template <class T>
std::vector<T> BasicMarket<T>::supply() const {
  std::vector<T> s;
  s.reserve(goods.size());
  for (const auto& g : goods) s.push_back(g.supply);
  return s;
}

template <class T>
bool BangPerBuckSet<T>::contains(std::size_t good) const {
  return std::find(goods.begin(), goods.end(), good) != goods.end();
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T sum(0);
  for (std::size_t j = 0; j < a.size() && j < b.size(); ++j) sum += a[j] * b[j];
  return sum;
}

template <class T>
std::vector<Violation> validate_market(const BasicMarket<T>& market) {
  std::vector<Violation> out;
  const std::size_t n = market.num_goods();
  if (n == 0) out.push_back({"market", "needs at least one good"});
  if (market.num_buyers() == 0) out.push_back({"market", "needs at least one buyer"});
  for (std::size_t j = 0; j < n; ++j) {
    if (market.goods[j].supply < T(0)) out.push_back({indexed("good", j), "supply must be nonnegative"});
  }
  bool shapes_ok = true;
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    const auto& b = market.buyers[i];
    if (b.budget < T(0)) out.push_back({indexed("buyer", i), "budget must be nonnegative"});
    if (b.values.size() != n) {
      shapes_ok = false;
      out.push_back({indexed("buyer", i), "values has " + std::to_string(b.values.size()) +
                                              " entries, expected " + std::to_string(n)});
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (b.values[j] < T(0))
        out.push_back({indexed("buyer", i), "value for good " + std::to_string(j) + " is negative"});
    }
  }
  if (!shapes_ok) return out;
  for (std::size_t j = 0; j < n; ++j) {
    bool valued = false;
    bool valued_with_money = false;
    for (const auto& b : market.buyers) {
      if (b.values[j] > T(0)) {
        valued = true;
        if (b.budget > T(0)) valued_with_money = true;
      }
    }
    if (!valued) {
      out.push_back({indexed("good", j), "every good must be valued positively by at least one buyer"});
    } else if (!valued_with_money) {
      out.push_back({indexed("good", j),
                     "only zero-budget buyers value this good; no positive minimal price exists"});
    }
  }
  return out;
}

template <class T>
void require_valid(const BasicMarket<T>& market) {
  auto violations = validate_market(market);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

template <class T>
BasicMarket<T> strip_worthless_goods(const BasicMarket<T>& market) {
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < market.num_goods(); ++j) {
    bool valued = std::any_of(market.buyers.begin(), market.buyers.end(), [&](const Buyer<T>& b) {
      return j < b.values.size() && b.values[j] > T(0);
    });
    if (valued) keep.push_back(j);
  }
  BasicMarket<T> out;
  for (std::size_t j : keep) out.goods.push_back(market.goods[j]);
  for (const auto& b : market.buyers) {
    Buyer<T> nb{b.name, {}, b.budget};
    for (std::size_t j : keep) nb.values.push_back(j < b.values.size() ? b.values[j] : T(0));
    out.buyers.push_back(std::move(nb));
  }
  return out;
}

template <class T>
BangPerBuckSet<T> bang_per_buck(const Buyer<T>& buyer, const PriceVector<T>& prices, const T& tol) {
  if (buyer.values.size() != prices.size())
    throw std::invalid_argument("bang_per_buck: price vector has wrong dimension");
  BangPerBuckSet<T> out;
  T best(1);  // money: v_0 / p_0 = 1
  std::vector<T> ratios(prices.size());
  for (std::size_t j = 0; j < prices.size(); ++j) {
    if (!(prices[j] > T(0))) throw std::domain_error("undefined ratio");
    ratios[j] = buyer.values[j] / prices[j];
    if (ratios[j] > best) best = ratios[j];
  }
  const T threshold = (T(1) - tol) * best;
  out.max_ratio = best;
  out.money = T(1) >= threshold;
  for (std::size_t j = 0; j < prices.size(); ++j) {
    if (ratios[j] > T(0) && ratios[j] >= threshold) out.goods.push_back(j);
  }
  return out;
}

template <class T>
std::vector<Bundle<T>> demand_vertices(const Buyer<T>& buyer, const PriceVector<T>& prices,
                                       const T& tol) {
  auto bpb = bang_per_buck(buyer, prices, tol);
  std::vector<Bundle<T>> out;
  const Bundle<T> zero(prices.size(), T(0));
  if (bpb.money || buyer.budget == T(0)) out.push_back(zero);
  if (buyer.budget == T(0)) return out;
  for (std::size_t j : bpb.goods) {
    Bundle<T> vertex = zero;
    vertex[j] = buyer.budget / prices[j];
    out.push_back(std::move(vertex));
  }
  return out;
}

template <class T>
bool is_demanded(const Buyer<T>& buyer, const PriceVector<T>& prices, const Bundle<T>& bundle,
                 const T& tol) {
  if (bundle.size() != prices.size()) return false;
  auto bpb = bang_per_buck(buyer, prices, tol);
  const T scale = buyer.budget > T(1) ? buyer.budget : T(1);
  const T slack = tol * scale;
  T spend(0);
  for (std::size_t j = 0; j < bundle.size(); ++j) {
    const T money = bundle[j] * prices[j];
    if (money < -slack) return false;
    if (money > slack && !bpb.contains(j)) return false;
    spend += money;
  }
  if (spend > buyer.budget + slack) return false;
  if (!bpb.money && spend < buyer.budget - slack) return false;
  return true;
}

#define QFM_INSTANTIATE(T)                                                                       \
  template struct BasicMarket<T>;                                                                \
  template struct BangPerBuckSet<T>;                                                             \
  template T dot<T>(const std::vector<T>&, const std::vector<T>&);                               \
  template std::vector<Violation> validate_market<T>(const BasicMarket<T>&);                     \
  template void require_valid<T>(const BasicMarket<T>&);                                         \
  template BasicMarket<T> strip_worthless_goods<T>(const BasicMarket<T>&);                       \
  template BangPerBuckSet<T> bang_per_buck<T>(const Buyer<T>&, const PriceVector<T>&, const T&); \
  template std::vector<Bundle<T>> demand_vertices<T>(const Buyer<T>&, const PriceVector<T>&,     \
                                                     const T&);                                  \
  template bool is_demanded<T>(const Buyer<T>&, const PriceVector<T>&, const Bundle<T>&, const T&);

QFM_INSTANTIATE(double)
QFM_INSTANTIATE(Rational)

#undef QFM_INSTANTIATE

}  // namespace qfm
