#pragma once

// Dinic max-flow over an arbitrary ordered field. With exact rationals the
// residual threshold is zero; with doubles, residuals at or below `epsilon`
// count as saturated.

#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace qfm {

template <class T>
class FlowNetwork {
 public:
  struct Arc {
    std::size_t to;
    std::size_t reverse;  // index of the paired arc in adjacency_[to]
    T capacity;
    T flow;
  };

  explicit FlowNetwork(std::size_t num_nodes, T epsilon = T(0))
      : adjacency_(num_nodes), epsilon_(epsilon) {}

  std::size_t num_nodes() const { return adjacency_.size(); }

  std::size_t add_node() {
    adjacency_.emplace_back();
    return adjacency_.size() - 1;
  }

  // Returns a handle usable with flow().
  std::pair<std::size_t, std::size_t> add_arc(std::size_t from, std::size_t to, T capacity) {
    const std::size_t forward_index = adjacency_[from].size();
    const std::size_t backward_index = adjacency_[to].size() + (from == to ? 1 : 0);
    adjacency_[from].push_back({to, backward_index, capacity, T(0)});
    adjacency_[to].push_back({from, forward_index, T(0), T(0)});
    return {from, forward_index};
  }

  const T& flow(std::pair<std::size_t, std::size_t> handle) const {
    return adjacency_[handle.first][handle.second].flow;
  }

  // Augments from the current flow; repeated calls with different sources
  // keep previously routed flow on source arcs (s-t paths never re-enter s).
  T max_flow(std::size_t source, std::size_t sink) {
    T total(0);
    while (build_levels(source, sink)) {
      next_arc_.assign(adjacency_.size(), 0);
      while (true) {
        T pushed = augment(source, sink, T(-1));
        if (!(pushed > T(0))) break;
        total += pushed;
      }
    }
    return total;
  }

  // Nodes reachable from `source` through arcs with positive residual.
  std::vector<bool> reachable_from(std::size_t source) const {
    std::vector<bool> seen(adjacency_.size(), false);
    std::vector<std::size_t> stack{source};
    seen[source] = true;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& arc : adjacency_[u]) {
        if (!seen[arc.to] && residual(arc) > epsilon_) {
          seen[arc.to] = true;
          stack.push_back(arc.to);
        }
      }
    }
    return seen;
  }

 private:
  T residual(const Arc& arc) const { return arc.capacity - arc.flow; }

  bool build_levels(std::size_t source, std::size_t sink) {
    level_.assign(adjacency_.size(), -1);
    std::queue<std::size_t> queue;
    level_[source] = 0;
    queue.push(source);
    while (!queue.empty()) {
      std::size_t u = queue.front();
      queue.pop();
      for (const auto& arc : adjacency_[u]) {
        if (level_[arc.to] < 0 && residual(arc) > epsilon_) {
          level_[arc.to] = level_[u] + 1;
          queue.push(arc.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  // `limit` < 0 means unbounded.
  T augment(std::size_t u, std::size_t sink, T limit) {
    if (u == sink) return limit;
    for (std::size_t& i = next_arc_[u]; i < adjacency_[u].size(); ++i) {
      Arc& arc = adjacency_[u][i];
      if (level_[arc.to] != level_[u] + 1 || !(residual(arc) > epsilon_)) continue;
      T room = residual(arc);
      T bound = (limit < T(0) || room < limit) ? room : limit;
      T pushed = augment(arc.to, sink, bound);
      if (pushed > T(0)) {
        arc.flow += pushed;
        adjacency_[arc.to][arc.reverse].flow -= pushed;
        return pushed;
      }
    }
    return T(0);
  }

  std::vector<std::vector<Arc>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> next_arc_;
  T epsilon_;
};

}  // namespace qfm
