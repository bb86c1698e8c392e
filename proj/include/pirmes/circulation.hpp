#pragma once

#include <cstdint>
#include <vector>

namespace pirmes {

/// Minimum-cost circulation with integral capacities and costs, solved by
/// cancelling negative residual cycles found with Bellman-Ford. Intended for
/// small graphs; every cancellation pushes the bottleneck capacity.
class MinCostCirculation {
 public:
  explicit MinCostCirculation(int num_nodes) : num_nodes_(num_nodes) {}

  /// Returns the arc id.
  int add_arc(int from, int to, std::int64_t capacity, std::int64_t cost);

  /// Returns the optimal total cost.
  std::int64_t solve();

  std::int64_t flow(int arc) const { return arcs_[2 * arc].flow; }
  int num_arcs() const { return static_cast<int>(arcs_.size() / 2); }
  int num_nodes() const { return num_nodes_; }

 private:
  struct Residual {
    int from;
    int to;
    std::int64_t capacity;
    std::int64_t cost;
    std::int64_t flow;
  };

  std::int64_t residual(int k) const { return arcs_[k].capacity - arcs_[k].flow; }
  bool cancel_one_negative_cycle();

  int num_nodes_;
  std::vector<Residual> arcs_;  // arc 2k forward, 2k+1 its reverse
};

}  // namespace pirmes
