#include "pirmes/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pirmes {

namespace {

class Enumerator {
 public:
  Enumerator(const MarketInstance& instance, std::int64_t budget)
      : instance_(instance),
        budget_(budget),
        match_(instance.num_students()),
        load_(instance.num_schools(), 0) {}

  std::vector<Matching> run() {
    recurse(0);
    return std::move(found_);
  }

 private:
  // Worst (largest) priority class currently seated at s among students < k.
  int worst_seated(int s, int k) const {
    int worst = 0;
    for (int j = 0; j < k; ++j) {
      if (match_[j] == s) worst = std::max(worst, instance_.priority_class(j, s));
    }
    return worst;
  }

  bool consistent(int k, int s) const {
    if (s != kUnassigned) {
      const int cls = instance_.priority_class(k, s);
      for (int i = 0; i < k; ++i) {
        const int other = instance_.priority_class(i, s);
        if (other != 0 && other < cls && instance_.prefers(i, s, match_[i])) {
          return false;
        }
      }
    }
    for (int t : instance_.preferences(k)) {
      if (t == s) break;
      if (worst_seated(t, k) > instance_.priority_class(k, t)) return false;
    }
    return true;
  }

  void recurse(int k) {
    if (++nodes_ > budget_) throw Error("stable-set enumeration exceeded its node budget");
    if (k == instance_.num_students()) {
      if (is_weakly_stable(instance_, match_).stable) found_.push_back(match_);
      return;
    }
    for (int s : instance_.preferences(k)) {
      if (load_[s] >= instance_.capacity(s) || !consistent(k, s)) continue;
      match_.assign(k, s);
      ++load_[s];
      recurse(k + 1);
      --load_[s];
      match_.assign(k, kUnassigned);
    }
    if (consistent(k, kUnassigned)) recurse(k + 1);
  }

  const MarketInstance& instance_;
  std::int64_t budget_;
  std::int64_t nodes_ = 0;
  Matching match_;
  std::vector<int> load_;
  std::vector<Matching> found_;
};

StableSet finish(std::vector<Matching> matchings) {
  std::sort(matchings.begin(), matchings.end());
  matchings.erase(std::unique(matchings.begin(), matchings.end()), matchings.end());
  return {std::move(matchings), true};
}

}  // namespace

StableSet enumerate_weakly_stable(const MarketInstance& instance, std::int64_t budget) {
  return finish(Enumerator(instance, budget).run());
}

StableSet enumerate_by_filter(const MarketInstance& instance, std::int64_t budget) {
  const int n = instance.num_students();
  // Odometer over (preference list + unassigned) per student.
  std::vector<int> digit(n, 0);
  std::vector<Matching> found;
  std::int64_t visited = 0;
  while (true) {
    if (++visited > budget) throw Error("filter enumeration exceeded its budget");
    Matching m(n);
    for (int i = 0; i < n; ++i) {
      const auto prefs = instance.preferences(i);
      if (digit[i] < static_cast<int>(prefs.size())) m.assign(i, prefs[digit[i]]);
    }
    const auto loads = school_loads(instance, m);
    bool feasible = true;
    for (int s = 0; s < instance.num_schools(); ++s) feasible &= loads[s] <= instance.capacity(s);
    if (feasible && is_weakly_stable(instance, m).stable) found.push_back(m);

    int pos = 0;
    while (pos < n) {
      if (++digit[pos] <= static_cast<int>(instance.preferences(pos).size())) break;
      digit[pos++] = 0;
    }
    if (pos == n) break;
  }
  return finish(std::move(found));
}

ExPostResult is_ex_post_stable(const MarketInstance& instance, const RandomMatching<double>& p,
                               const StableSet& stable_set) {
  if (!stable_set.complete) throw Error("ex-post check needs a complete stable set");
  ExPostResult result;
  for (int i = 0; i < instance.num_students(); ++i) {
    for (int s = 0; s < instance.num_schools(); ++s) {
      if (!instance.is_edge(i, s) && std::abs(p(i, s)) > 1e-12) return result;
    }
  }
  if (stable_set.matchings.empty()) return result;

  const int num_edges = instance.num_edges();
  lp::LinearProgram model;
  for (int e = 0; e < num_edges; ++e) {
    const Edge& edge = instance.edges()[e];
    model.add_row(lp::Sense::kEqual, p(edge.student, edge.school));
  }
  const int convexity = model.add_row(lp::Sense::kEqual, 1.0);
  for (const Matching& m : stable_set.matchings) {
    const int v = model.add_variable(0.0);
    for (int i = 0; i < m.size(); ++i) {
      if (m[i] != kUnassigned) model.A(instance.edge_index(i, m[i]), v) = 1.0;
    }
    model.A(convexity, v) = 1.0;
  }
  const lp::Solution sol = lp::solve(model);
  if (sol.status != lp::Status::kOptimal) return result;
  result.ex_post_stable = true;
  for (int v = 0; v < model.num_vars(); ++v) {
    if (sol.x(v) > 1e-12) {
      result.matchings.push_back(stable_set.matchings[v]);
      result.weights.push_back(sol.x(v));
    }
  }
  return result;
}

ConstrainedOptimum exact_constrained_optimum(const MarketInstance& instance,
                                             const RandomMatching<double>& p,
                                             const StableSet& stable_set, bool equal_treatment) {
  if (!stable_set.complete) throw Error("constrained optimum needs a complete stable set");
  if (stable_set.matchings.empty()) throw Error("instance has no weakly stable matching");
  std::vector<EqualityRow> rows;
  if (equal_treatment) rows = equality_rows(identical_pairs(instance, p));
  MasterProblem master(instance, p, rows);
  for (const Matching& m : stable_set.matchings) master.add(m);
  const MasterSolution sol = master.solve();

  ConstrainedOptimum out;
  out.solution = lottery_from_master(instance, master, sol, p, 1e-12);
  out.solution.status =
      sol.status == MasterSolution::Status::kOptimal ? CgStatus::kOptimal : CgStatus::kArtificialActive;
  out.dominated_by_ex_post_stable = sol.status == MasterSolution::Status::kOptimal;
  if (out.dominated_by_ex_post_stable && is_ex_post_stable(instance, p, stable_set).ex_post_stable) {
    out.constrained_sd_efficient =
        out.solution.average_rank >= average_rank(instance, p) - 1e-9;
  }
  return out;
}

Matching best_stable_pareto_improvement(const MarketInstance& instance, const Matching& m,
                                        const StableSet& stable_set) {
  const int n = instance.num_students();
  const Matching* best = nullptr;
  int best_total = std::numeric_limits<int>::max();
  for (const Matching& candidate : stable_set.matchings) {
    bool dominates = true;
    for (int i = 0; i < n && dominates; ++i) {
      dominates = student_rank(instance, candidate, i) <= student_rank(instance, m, i);
    }
    if (!dominates) continue;
    const int total = total_rank(instance, candidate);
    if (total < best_total) {
      best_total = total;
      best = &candidate;
    }
  }
  if (best == nullptr) throw Error("matching is not weakly stable; no stable improvement set");
  return *best;
}

Matching best_stable_pareto_improvement(const MarketInstance& instance, const Matching& m) {
  return best_stable_pareto_improvement(instance, m, enumerate_weakly_stable(instance));
}

}  // namespace pirmes
