#include "pirmes/circulation.hpp"

#include <algorithm>
#include <limits>

namespace pirmes {

int MinCostCirculation::add_arc(int from, int to, std::int64_t capacity, std::int64_t cost) {
  arcs_.push_back({from, to, capacity, cost, 0});
  arcs_.push_back({to, from, 0, -cost, 0});
  return static_cast<int>(arcs_.size() / 2) - 1;
}

std::int64_t MinCostCirculation::solve() {
  while (cancel_one_negative_cycle()) {
  }
  std::int64_t total = 0;
  for (std::size_t k = 0; k < arcs_.size(); k += 2) total += arcs_[k].flow * arcs_[k].cost;
  return total;
}

bool MinCostCirculation::cancel_one_negative_cycle() {
  // Bellman-Ford from a virtual source connected to every node at cost 0.
  std::vector<std::int64_t> dist(num_nodes_, 0);
  std::vector<int> parent(num_nodes_, -1);
  int touched = -1;
  for (int round = 0; round < num_nodes_; ++round) {
    touched = -1;
    for (int k = 0; k < static_cast<int>(arcs_.size()); ++k) {
      if (residual(k) <= 0) continue;
      const auto& a = arcs_[k];
      if (dist[a.from] + a.cost < dist[a.to]) {
        dist[a.to] = dist[a.from] + a.cost;
        parent[a.to] = k;
        touched = a.to;
      }
    }
    if (touched < 0) return false;
  }
  // A relaxation in round |V| means a negative cycle reachable via parents.
  int v = touched;
  for (int step = 0; step < num_nodes_; ++step) v = arcs_[parent[v]].from;
  std::vector<int> cycle;
  int u = v;
  do {
    cycle.push_back(parent[u]);
    u = arcs_[parent[u]].from;
  } while (u != v);
  std::int64_t push = std::numeric_limits<std::int64_t>::max();
  for (int k : cycle) push = std::min(push, residual(k));
  for (int k : cycle) {
    arcs_[k].flow += push;
    arcs_[k ^ 1].flow -= push;
  }
  return true;
}

}  // namespace pirmes
