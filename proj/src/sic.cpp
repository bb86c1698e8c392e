#include "pirmes/sic.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "pirmes/circulation.hpp"
#include "pirmes/random.hpp"

namespace pirmes {

EnvyGraph::EnvyGraph(int num_students, std::vector<EnvyArc> arcs)
    : arcs_(std::move(arcs)), out_(num_students) {
  for (int k = 0; k < static_cast<int>(arcs_.size()); ++k) out_[arcs_[k].from].push_back(k);
}

bool EnvyGraph::has_arc(int from, int to) const {
  for (int k : out_[from]) {
    if (arcs_[k].to == to) return true;
  }
  return false;
}

EnvyGraph build_envy_graph(const MarketInstance& instance, const Matching& m) {
  if (!is_weakly_stable(instance, m).stable) {
    throw Error("envy graph requires a weakly stable matching");
  }
  const int n = instance.num_students();
  const int num_schools = instance.num_schools();
  // Best (smallest) priority class among students who envy each school.
  std::vector<int> best_envious(num_schools, 0);
  for (const Edge& e : instance.edges()) {
    if (!instance.prefers(e.student, e.school, m[e.student])) continue;
    const int cls = instance.priority_class(e.student, e.school);
    if (cls == 0) continue;
    int& best = best_envious[e.school];
    if (best == 0 || cls < best) best = cls;
  }
  std::vector<std::vector<int>> seated(num_schools);
  for (int j = 0; j < n; ++j) {
    if (m[j] != kUnassigned) seated[m[j]].push_back(j);
  }
  std::vector<EnvyArc> arcs;
  for (int i = 0; i < n; ++i) {
    if (m[i] == kUnassigned) continue;
    for (int s : instance.preferences(i)) {
      if (s == m[i]) break;
      if (instance.priority_class(i, s) != best_envious[s]) continue;
      for (int j : seated[s]) arcs.push_back({i, j, s});
    }
  }
  return EnvyGraph(n, std::move(arcs));
}

std::optional<ImprovementCycle> find_cycle(const EnvyGraph& graph,
                                           std::span<const int> start_order,
                                           std::span<const char> excluded) {
  const int n = graph.num_nodes();
  std::vector<int> order;
  if (start_order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  } else {
    order.assign(start_order.begin(), start_order.end());
  }
  auto skip = [&](int v) { return !excluded.empty() && excluded[v]; };

  std::vector<char> color(n, 0);  // 0 new, 1 on stack, 2 finished
  std::vector<std::pair<int, std::size_t>> stack;
  for (int root : order) {
    if (color[root] != 0 || skip(root)) continue;
    stack.push_back({root, 0});
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& out = graph.out_arcs(v);
      if (next == out.size()) {
        color[v] = 2;
        stack.pop_back();
        continue;
      }
      const int w = graph.arcs()[out[next++]].to;
      if (skip(w) || color[w] == 2) continue;
      if (color[w] == 1) {
        ImprovementCycle cycle;
        auto it = std::find_if(stack.begin(), stack.end(),
                               [w](const auto& frame) { return frame.first == w; });
        for (; it != stack.end(); ++it) cycle.students.push_back(it->first);
        return cycle;
      }
      color[w] = 1;
      stack.push_back({w, 0});
    }
  }
  return std::nullopt;
}

int rank_change(const MarketInstance& instance, const Matching& m,
                const ImprovementCycle& cycle) {
  int change = 0;
  const auto& c = cycle.students;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const int next = c[(k + 1) % c.size()];
    change += instance.rank(c[k], m[next]) - instance.rank(c[k], m[c[k]]);
  }
  return change;
}

Matching eliminate(const MarketInstance& instance, const Matching& m,
                   std::span<const ImprovementCycle> cycles) {
  if (cycles.empty()) return m;
  const EnvyGraph graph = build_envy_graph(instance, m);
  std::vector<char> used(instance.num_students(), 0);
  Matching out = m;
  for (const auto& cycle : cycles) {
    const auto& c = cycle.students;
    if (c.size() < 2) throw Error("improvement cycle needs at least two students");
    for (std::size_t k = 0; k < c.size(); ++k) {
      const int i = c[k];
      const int next = c[(k + 1) % c.size()];
      if (i < 0 || i >= instance.num_students() || used[i]) {
        throw Error("improvement cycles must be disjoint and repeat no student");
      }
      used[i] = 1;
      if (!graph.has_arc(i, next)) throw Error("cycle uses an arc that is not in the envy graph");
      out.assign(i, m[next]);
    }
  }
  assert(is_weakly_stable(instance, out).stable);
  return out;
}

std::vector<ImprovementCycle> best_disjoint_cycle_set(const MarketInstance& instance,
                                                      const Matching& m) {
  const EnvyGraph graph = build_envy_graph(instance, m);
  const int n = instance.num_students();
  // Node 2i = entry of student i, 2i+1 = exit; the split arc has capacity 1.
  MinCostCirculation flow(2 * n);
  for (int i = 0; i < n; ++i) flow.add_arc(2 * i, 2 * i + 1, 1, 0);
  std::vector<int> arc_ids;
  for (const auto& a : graph.arcs()) {
    const std::int64_t cost = instance.rank(a.from, a.school) - instance.rank(a.from, m[a.from]);
    arc_ids.push_back(flow.add_arc(2 * a.from + 1, 2 * a.to, 1, cost));
  }
  flow.solve();
  std::vector<int> successor(n, -1);
  for (std::size_t k = 0; k < arc_ids.size(); ++k) {
    if (flow.flow(arc_ids[k]) > 0) successor[graph.arcs()[k].from] = graph.arcs()[k].to;
  }
  std::vector<ImprovementCycle> cycles;
  std::vector<char> seen(n, 0);
  for (int i = 0; i < n; ++i) {
    if (successor[i] < 0 || seen[i]) continue;
    ImprovementCycle cycle;
    for (int v = i; !seen[v]; v = successor[v]) {
      seen[v] = 1;
      cycle.students.push_back(v);
    }
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

ResolveResult resolve_with_trace(const MarketInstance& instance, const Matching& m,
                                 const ResolveOptions& options) {
  ResolveResult result{m, {}};
  std::optional<Rng> rng;
  if (options.seed) rng.emplace(*options.seed);
  while (true) {
    std::vector<ImprovementCycle> cycles;
    if (options.policy == CyclePolicy::kGreedyBestSet) {
      cycles = best_disjoint_cycle_set(instance, result.matching);
    } else {
      EnvyGraph graph = build_envy_graph(instance, result.matching);
      std::vector<int> order;
      if (rng) {
        auto arcs = graph.arcs();
        rng->shuffle(std::span<EnvyArc>(arcs));
        graph = EnvyGraph(graph.num_nodes(), std::move(arcs));
        order.resize(graph.num_nodes());
        std::iota(order.begin(), order.end(), 0);
        rng->shuffle(std::span<int>(order));
      }
      if (auto c = find_cycle(graph, order)) cycles.push_back(std::move(*c));
    }
    if (cycles.empty()) break;
    result.matching = eliminate(instance, result.matching, cycles);
    result.trace.push_back({std::move(cycles), average_rank(instance, result.matching)});
  }
  return result;
}

}  // namespace pirmes
