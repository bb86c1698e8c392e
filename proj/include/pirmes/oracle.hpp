#pragma once

// Brute-force ground truth for small instances: the complete set of weakly
// stable matchings and exact answers computed over it.

#include <cstdint>
#include <optional>
#include <vector>

#include "pirmes/lottery.hpp"
#include "pirmes/market.hpp"

namespace pirmes {

struct StableSet {
  std::vector<Matching> matchings;  ///< sorted, duplicate-free
  bool complete = true;
};

/// Backtracking over students in index order, schools in preference order,
/// then "unassigned". Partial assignments that already contain justified envy
/// are cut. Throws Error when more than `budget` search nodes are visited.
StableSet enumerate_weakly_stable(const MarketInstance& instance,
                                  std::int64_t budget = 20'000'000);

/// Independent reference: every capacity-feasible matching, filtered by
/// is_weakly_stable. Exponential; only for cross-checks on tiny instances.
StableSet enumerate_by_filter(const MarketInstance& instance, std::int64_t budget = 50'000'000);

struct ExPostResult {
  bool ex_post_stable = false;
  std::vector<Matching> matchings;
  std::vector<double> weights;
};

/// LP feasibility of p = sum lambda_l M_l over the stable set. Throws Error
/// on an incomplete stable set.
ExPostResult is_ex_post_stable(const MarketInstance& instance, const RandomMatching<double>& p,
                               const StableSet& stable_set);

struct ConstrainedOptimum {
  LotterySolution solution;
  /// False when the master needs the artificial column, i.e. p itself is
  /// not sd-dominated by any ex-post stable random matching.
  bool dominated_by_ex_post_stable = false;
  /// p is ex-post stable and nothing ex-post stable sd-dominates it strictly.
  bool constrained_sd_efficient = false;
};

ConstrainedOptimum exact_constrained_optimum(const MarketInstance& instance,
                                             const RandomMatching<double>& p,
                                             const StableSet& stable_set,
                                             bool equal_treatment = false);

/// Among stable matchings giving every student a weakly better rank than m,
/// one with minimum total rank (first in sorted order on ties).
Matching best_stable_pareto_improvement(const MarketInstance& instance, const Matching& m,
                                        const StableSet& stable_set);
Matching best_stable_pareto_improvement(const MarketInstance& instance, const Matching& m);

}  // namespace pirmes
