#pragma once

// Stable improvement cycles: envy graph, cycle search and elimination, and
// resolution of a weakly stable matching to a constrained-efficient one.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pirmes/market.hpp"

namespace pirmes {

struct EnvyArc {
  int from;    ///< envious student
  int to;      ///< student whose seat is wanted
  int school;  ///< M(to)

  friend bool operator==(const EnvyArc&, const EnvyArc&) = default;
};

/// Arc (i, j) iff both are matched, M(j) is strictly better for i than M(i),
/// and i is in the highest priority class at M(j) among all students (matched
/// or not) who strictly prefer M(j) to their own assignment.
class EnvyGraph {
 public:
  EnvyGraph(int num_students, std::vector<EnvyArc> arcs);

  int num_nodes() const { return static_cast<int>(out_.size()); }
  const std::vector<EnvyArc>& arcs() const { return arcs_; }
  /// Arc ids leaving student i, in construction order.
  const std::vector<int>& out_arcs(int i) const { return out_[i]; }
  bool has_arc(int from, int to) const;

 private:
  std::vector<EnvyArc> arcs_;
  std::vector<std::vector<int>> out_;
};

/// Students i_1..i_k; i_j receives the seat of i_{j+1} (cyclically).
struct ImprovementCycle {
  std::vector<int> students;

  friend bool operator==(const ImprovementCycle&, const ImprovementCycle&) = default;
};

/// Throws Error unless m is weakly stable.
EnvyGraph build_envy_graph(const MarketInstance& instance, const Matching& m);

/// DFS from the lowest student index (or in `start_order` when given),
/// following arcs in construction order. Students flagged in `excluded` are
/// skipped.
std::optional<ImprovementCycle> find_cycle(const EnvyGraph& graph,
                                           std::span<const int> start_order = {},
                                           std::span<const char> excluded = {});

/// Sum over cycle members of rank(new seat) - rank(old seat); negative.
int rank_change(const MarketInstance& instance, const Matching& m,
                const ImprovementCycle& cycle);

/// Applies pairwise disjoint cycles of D_M. Throws Error on overlapping
/// cycles or on a cycle that is not a directed cycle of D_M.
Matching eliminate(const MarketInstance& instance, const Matching& m,
                   std::span<const ImprovementCycle> cycles);

/// Vertex-disjoint cycle family of D_M with the largest total rank decrease,
/// via min-cost circulation with split nodes of unit capacity.
std::vector<ImprovementCycle> best_disjoint_cycle_set(const MarketInstance& instance,
                                                      const Matching& m);

enum class CyclePolicy { kFirstFound, kGreedyBestSet };

struct ResolveOptions {
  CyclePolicy policy = CyclePolicy::kFirstFound;
  /// Randomizes DFS start order and arc order under kFirstFound.
  std::optional<std::uint64_t> seed;
};

struct ResolveStep {
  std::vector<ImprovementCycle> cycles;
  Rational average_rank;  ///< after the step
};

struct ResolveResult {
  Matching matching;
  std::vector<ResolveStep> trace;
};

/// Eliminates cycles until D_M is acyclic. Throws Error unless m is weakly
/// stable.
ResolveResult resolve_with_trace(const MarketInstance& instance, const Matching& m,
                                 const ResolveOptions& options = {});

inline Matching resolve_to_constrained_efficient(const MarketInstance& instance,
                                                 const Matching& m,
                                                 const ResolveOptions& options = {}) {
  return resolve_with_trace(instance, m, options).matching;
}

}  // namespace pirmes
