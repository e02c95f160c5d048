#include "qfm/feasibility.hpp"

#include <algorithm>
#include <stdexcept>

#include "qfm/flow_network.hpp"

namespace qfm {

namespace {

template <class T>
T scale_of(const SpendingGraph<T>& graph) {
  T total(1);
  for (const auto& b : graph.budget) total += b;
  for (const auto& c : graph.capacity) total += c;
  return total;
}

template <class T>
void require_positive(const PriceVector<T>& prices, std::size_t n) {
  if (prices.size() != n) throw PreconditionError("price vector has wrong dimension");
  for (const auto& p : prices) {
    if (!(p > T(0))) throw PreconditionError("prices must be strictly positive");
  }
}

// Network layout: 0 = source, 1 = sink, buyers, then goods.
template <class T>
struct TransportNetwork {
  FlowNetwork<T> net;
  std::vector<std::pair<std::size_t, std::size_t>> edge_arcs;
  std::vector<std::pair<std::size_t, std::size_t>> sink_arcs;
  std::size_t buyer_base = 2;
  std::size_t good_base = 0;

  TransportNetwork(const SpendingGraph<T>& graph, T epsilon)
      : net(2 + graph.budget.size() + graph.capacity.size(), epsilon) {
    good_base = buyer_base + graph.budget.size();
    T unbounded = scale_of(graph);
    for (const auto& [i, j] : graph.edges)
      edge_arcs.push_back(net.add_arc(buyer_base + i, good_base + j, unbounded));
    for (std::size_t j = 0; j < graph.capacity.size(); ++j)
      sink_arcs.push_back(net.add_arc(good_base + j, 1, graph.capacity[j]));
  }

  Allocation<T> allocation(const SpendingGraph<T>& graph) const {
    Allocation<T> x(graph.budget.size(), Bundle<T>(graph.capacity.size(), T(0)));
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto& [i, j] = graph.edges[e];
      x[i][j] = net.flow(edge_arcs[e]) / graph.prices[j];
    }
    return x;
  }
};

template <class T>
T flow_epsilon(const T& tol, const T& scale) {
  if constexpr (is_exact_v<T>) {
    (void)tol;
    (void)scale;
    return T(0);
  } else {
    return tol * scale * 1e-3;
  }
}

template <class T>
Extension<T> extend(const SpendingGraph<T>& graph, const T& tol,
                    std::vector<bool>* reachable_goods = nullptr) {
  const T scale = scale_of(graph);
  const T slack = tol * scale;
  TransportNetwork<T> t(graph, flow_epsilon(tol, scale));
  Extension<T> out;
  for (std::size_t i = 0; i < graph.budget.size(); ++i) {
    if (graph.buyer_class[i] == BuyerClass::strict && graph.budget[i] > T(0)) {
      t.net.add_arc(0, t.buyer_base + i, graph.budget[i]);
      out.strict_requirement += graph.budget[i];
    }
  }
  T strict_flow = t.net.max_flow(0, 1);
  out.feasible = strict_flow >= out.strict_requirement - slack;
  if (reachable_goods != nullptr) {
    auto seen = t.net.reachable_from(0);
    reachable_goods->assign(graph.capacity.size(), false);
    for (std::size_t j = 0; j < graph.capacity.size(); ++j) (*reachable_goods)[j] = seen[t.good_base + j];
  }
  for (std::size_t i = 0; i < graph.budget.size(); ++i) {
    if (graph.buyer_class[i] == BuyerClass::flexible && graph.budget[i] > T(0))
      t.net.add_arc(0, t.buyer_base + i, graph.budget[i]);
  }
  T extra = t.net.max_flow(0, 1);
  out.revenue = strict_flow + extra;
  out.allocation = t.allocation(graph);
  out.sold_money.resize(graph.capacity.size());
  for (std::size_t j = 0; j < graph.capacity.size(); ++j) out.sold_money[j] = t.net.flow(t.sink_arcs[j]);
  return out;
}

template <class T>
FeasibilityCertificate<T> feasible_from_graph(const SpendingGraph<T>& graph, const T& tol) {
  std::vector<bool> reachable;
  Extension<T> ext = extend(graph, tol, &reachable);
  FeasibilityCertificate<T> cert;
  cert.feasible = ext.feasible;
  if (ext.feasible) {
    cert.allocation = std::move(ext.allocation);
    cert.revenue = ext.revenue;
    return cert;
  }
  // Goods on the source side of the minimum cut: every strict buyer reaching
  // them is confined to them, and together they need more than they absorb.
  cert.witness_kind = WitnessKind::over_demand;
  T capacity(0);
  for (std::size_t j = 0; j < reachable.size(); ++j) {
    if (reachable[j]) {
      cert.witness.push_back(j);
      capacity += graph.capacity[j];
    }
  }
  T forced(0);
  for (std::size_t i = 0; i < graph.budget.size(); ++i) {
    if (graph.buyer_class[i] != BuyerClass::strict) continue;
    const auto& goods = graph.demand[i].goods;
    bool confined = std::all_of(goods.begin(), goods.end(), [&](std::size_t j) { return reachable[j]; });
    if (confined) forced += graph.budget[i];
  }
  cert.witness_excess = forced - capacity;
  return cert;
}

}  // namespace

template <class T>
SpendingGraph<T> build_spending_graph(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                      const T& tol) {
  require_positive(prices, market.num_goods());
  SpendingGraph<T> g;
  g.prices = prices;
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    const auto& buyer = market.buyers[i];
    auto bpb = bang_per_buck(buyer, prices, tol);
    bpb.buyer = i;
    g.buyer_class.push_back(bpb.money ? BuyerClass::flexible : BuyerClass::strict);
    g.budget.push_back(buyer.budget);
    for (std::size_t j : bpb.goods) g.edges.emplace_back(i, j);
    g.demand.push_back(std::move(bpb));
  }
  for (std::size_t j = 0; j < market.num_goods(); ++j) g.capacity.push_back(prices[j] * market.goods[j].supply);
  return g;
}

template <class T>
Extension<T> max_extension(const BasicMarket<T>& market, const PriceVector<T>& prices, const T& tol) {
  require_valid(market);
  return extend(build_spending_graph(market, prices, tol), tol);
}

template <class T>
FeasibilityCertificate<T> check_feasible(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                         const T& tol) {
  require_valid(market);
  return feasible_from_graph(build_spending_graph(market, prices, tol), tol);
}

template <class T>
bool is_feasible_price_unchecked(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                 const T& tol) {
  return extend(build_spending_graph(market, prices, tol), tol).feasible;
}

template <class T>
FeasibilityCertificate<T> check_clearing(const BasicMarket<T>& market, const PriceVector<T>& prices,
                                         const T& tol) {
  require_valid(market);
  const auto graph = build_spending_graph(market, prices, tol);
  auto feasibility = feasible_from_graph(graph, tol);
  if (!feasibility.feasible) return feasibility;

  // Circulation with lower bounds: strict buyers route exactly their budget,
  // every good absorbs exactly p_j s_j, and a return arc closes sink to
  // source. Lower bounds become node balances served from a super source.
  const T scale = scale_of(graph);
  const std::size_t m = graph.budget.size();
  const std::size_t n = graph.capacity.size();
  const std::size_t buyer_base = 2;
  const std::size_t good_base = 2 + m;
  const std::size_t super_source = 2 + m + n;
  const std::size_t super_sink = super_source + 1;
  FlowNetwork<T> net(super_sink + 1, flow_epsilon(tol, scale));
  std::vector<T> balance(super_sink + 1, T(0));
  std::vector<std::pair<std::size_t, std::size_t>> edge_arcs;
  for (const auto& [i, j] : graph.edges)
    edge_arcs.push_back(net.add_arc(buyer_base + i, good_base + j, scale));
  for (std::size_t i = 0; i < m; ++i) {
    if (!(graph.budget[i] > T(0))) continue;
    if (graph.buyer_class[i] == BuyerClass::strict) {
      balance[buyer_base + i] += graph.budget[i];
      balance[0] -= graph.budget[i];
    } else {
      net.add_arc(0, buyer_base + i, graph.budget[i]);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    balance[1] += graph.capacity[j];
    balance[good_base + j] -= graph.capacity[j];
  }
  net.add_arc(1, 0, scale);
  T required(0);
  for (std::size_t v = 0; v < balance.size(); ++v) {
    if (balance[v] > T(0)) {
      net.add_arc(super_source, v, balance[v]);
      required += balance[v];
    } else if (balance[v] < T(0)) {
      net.add_arc(v, super_sink, -balance[v]);
    }
  }
  T routed = net.max_flow(super_source, super_sink);
  FeasibilityCertificate<T> cert;
  if (routed >= required - tol * scale) {
    cert.feasible = true;
    Allocation<T> x(m, Bundle<T>(n, T(0)));
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto& [i, j] = graph.edges[e];
      x[i][j] = net.flow(edge_arcs[e]) / graph.prices[j];
    }
    cert.allocation = std::move(x);
    T total(0);
    for (const auto& cap : graph.capacity) total += cap;
    cert.revenue = total;
    return cert;
  }
  // Feasible but not clearing: report what the revenue-maximal allocation
  // cannot sell.
  Extension<T> ext = extend(graph, tol);
  cert.witness_kind = WitnessKind::under_sold;
  T unsold(0);
  for (std::size_t j = 0; j < n; ++j) {
    T gap = graph.capacity[j] - ext.sold_money[j];
    if (gap > tol * scale) {
      cert.witness.push_back(j);
      unsold += gap;
    }
  }
  cert.witness_excess = unsold;
  cert.revenue = ext.revenue;
  return cert;
}

template <class T>
PriceVector<T> meet(const PriceVector<T>& p, const PriceVector<T>& q) {
  if (p.size() != q.size()) throw PreconditionError("meet: dimension mismatch");
  PriceVector<T> r(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) r[j] = q[j] < p[j] ? q[j] : p[j];
  return r;
}

template <class T>
std::vector<T> aggregate(const Allocation<T>& allocation, std::size_t num_goods) {
  std::vector<T> total(num_goods, T(0));
  for (const auto& bundle : allocation) {
    for (std::size_t j = 0; j < num_goods && j < bundle.size(); ++j) total[j] += bundle[j];
  }
  return total;
}

template <class T>
bool is_feasible_outcome(const BasicMarket<T>& market, const Outcome<T>& outcome, const T& tol) {
  const std::size_t n = market.num_goods();
  if (outcome.prices.size() != n || outcome.allocation.size() != market.num_buyers()) return false;
  for (const auto& p : outcome.prices) {
    if (!(p > T(0))) return false;
  }
  auto total = aggregate(outcome.allocation, n);
  for (std::size_t j = 0; j < n; ++j) {
    const T& s = market.goods[j].supply;
    if (total[j] > s + tol * (s > T(1) ? s : T(1))) return false;
  }
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    if (!is_demanded(market.buyers[i], outcome.prices, outcome.allocation[i], tol)) return false;
  }
  return true;
}

template <class T>
Allocation<T> meet_allocation(const BasicMarket<T>& market, const PriceVector<T>& p,
                              const PriceVector<T>& q, const Allocation<T>& x,
                              const Allocation<T>& y, const T& tol) {
  require_valid(market);
  if (!is_feasible_outcome(market, Outcome<T>{p, x}, tol))
    throw PreconditionError("meet_allocation: (p, x) is not a feasible outcome");
  if (!is_feasible_outcome(market, Outcome<T>{q, y}, tol))
    throw PreconditionError("meet_allocation: (q, y) is not a feasible outcome");
  const auto r = meet(p, q);
  Allocation<T> z;
  z.reserve(market.num_buyers());
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    auto bpb = bang_per_buck(market.buyers[i], r, tol);
    bool demands_b = std::any_of(bpb.goods.begin(), bpb.goods.end(),
                                 [&](std::size_t j) { return p[j] >= q[j]; });
    z.push_back(demands_b ? y[i] : x[i]);
  }
  return z;
}

#define QFM_INSTANTIATE(T)                                                                        \
  template SpendingGraph<T> build_spending_graph<T>(const BasicMarket<T>&, const PriceVector<T>&, \
                                                    const T&);                                    \
  template Extension<T> max_extension<T>(const BasicMarket<T>&, const PriceVector<T>&, const T&); \
  template FeasibilityCertificate<T> check_feasible<T>(const BasicMarket<T>&,                     \
                                                       const PriceVector<T>&, const T&);          \
  template FeasibilityCertificate<T> check_clearing<T>(const BasicMarket<T>&,                     \
                                                       const PriceVector<T>&, const T&);          \
  template bool is_feasible_price_unchecked<T>(const BasicMarket<T>&, const PriceVector<T>&,      \
                                               const T&);                                         \
  template PriceVector<T> meet<T>(const PriceVector<T>&, const PriceVector<T>&);                  \
  template Allocation<T> meet_allocation<T>(const BasicMarket<T>&, const PriceVector<T>&,         \
                                            const PriceVector<T>&, const Allocation<T>&,          \
                                            const Allocation<T>&, const T&);                      \
  template bool is_feasible_outcome<T>(const BasicMarket<T>&, const Outcome<T>&, const T&);       \
  template std::vector<T> aggregate<T>(const Allocation<T>&, std::size_t);

QFM_INSTANTIATE(double)
QFM_INSTANTIATE(Rational)

#undef QFM_INSTANTIATE

}  // namespace qfm
