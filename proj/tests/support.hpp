#pragma once

// Shared helpers for the test binaries: literal instances, random small
// markets and a brute-force stability check written from the definition.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "pirmes/io.hpp"
#include "pirmes/market.hpp"
#include "pirmes/random.hpp"

namespace testing_support {

using pirmes::Matching;
using pirmes::MarketData;
using pirmes::MarketInstance;

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PIRMES_FIXTURE_DIR) / name;
}

/// Students "1".."n", schools "s1".."sm"; indices in the arguments are
/// 1-based to read like the worked examples.
inline MarketInstance build(int n, int m, const std::vector<std::vector<int>>& prefs,
                            const std::vector<std::vector<std::vector<int>>>& priorities,
                            std::vector<int> capacity = {}) {
  MarketData d;
  for (int i = 1; i <= n; ++i) d.students.push_back(std::to_string(i));
  for (int s = 1; s <= m; ++s) d.schools.push_back("s" + std::to_string(s));
  d.capacity = capacity.empty() ? std::vector<int>(m, 1) : std::move(capacity);
  for (const auto& list : prefs) {
    std::vector<int> row;
    for (int s : list) row.push_back(s - 1);
    d.preferences.push_back(std::move(row));
  }
  for (const auto& classes : priorities) {
    std::vector<std::vector<int>> out;
    for (const auto& group : classes) {
      std::vector<int> g;
      for (int i : group) g.push_back(i - 1);
      out.push_back(std::move(g));
    }
    d.priorities.push_back(std::move(out));
  }
  return MarketInstance(std::move(d));
}

/// 1-based school per student, 0 for unassigned.
inline Matching matching(const std::vector<int>& schools) {
  Matching m(static_cast<int>(schools.size()));
  for (std::size_t i = 0; i < schools.size(); ++i) {
    if (schools[i] > 0) m.assign(static_cast<int>(i), schools[i] - 1);
  }
  return m;
}

inline MarketInstance example1() {
  return build(4, 4, {{1, 3, 4, 2}, {1, 4, 3, 2}, {2, 3, 4, 1}, {2, 4, 3, 1}},
               {{{1, 2}, {3}, {4}}, {{3, 4}, {1}, {2}}, {{2}, {4}, {1, 3}}, {{1}, {3}, {2, 4}}});
}

/// The six matchings reachable by DA in example1, in the order the worked
/// example lists them.
inline std::vector<Matching> example1_da_matchings() {
  return {matching({1, 3, 2, 4}), matching({1, 4, 2, 3}), matching({1, 4, 3, 2}),
          matching({3, 1, 2, 4}), matching({3, 1, 4, 2}), matching({4, 1, 3, 2})};
}

inline MarketInstance sic6() {
  return build(6, 6, {{2, 4}, {1, 2, 3, 5}, {1, 3, 6}, {4, 1}, {5, 2}, {6, 3}},
               {{{4}, {2, 3}}, {{5}, {1}, {2}}, {{6}, {2}, {3}}, {{1}, {4}}, {{2}, {5}}, {{3}, {6}}});
}

inline Matching sic6_matching() { return matching({4, 5, 6, 1, 2, 3}); }

inline MarketInstance fdat() {
  return build(8, 8,
               {{1, 3, 4, 2}, {1, 4, 3, 2}, {2, 4, 3, 1}, {2, 3, 4, 1}, {5, 4, 6}, {7, 3, 8}, {5, 6}, {7, 8}},
               {{{3, 4}, {1, 2}},
                {{1, 2}, {3, 4}},
                {{3}, {2}, {1, 6}, {4}},
                {{4}, {1}, {2, 5}, {3}},
                {{7, 5}},
                {{7}, {5}},
                {{6, 8}},
                {{8}, {6}}});
}

inline Matching fdat_m1() { return matching({1, 4, 2, 3, 6, 7, 5, 8}); }
inline Matching fdat_m2() { return matching({3, 1, 4, 2, 5, 8, 6, 7}); }

/// Random market: each student lists a random subset of schools in random
/// order; each school's priority over its applicants is a random weak order.
inline MarketInstance random_instance(pirmes::Rng& rng, int max_students, int max_schools,
                                      int max_capacity = 2, double tie_prob = 0.5) {
  const int n = 1 + static_cast<int>(rng.below(max_students));
  const int m = 1 + static_cast<int>(rng.below(max_schools));
  MarketData d;
  for (int i = 0; i < n; ++i) d.students.push_back("i" + std::to_string(i));
  for (int s = 0; s < m; ++s) {
    d.schools.push_back("c" + std::to_string(s));
    d.capacity.push_back(1 + static_cast<int>(rng.below(max_capacity)));
  }
  std::vector<std::vector<int>> applicants(m);
  for (int i = 0; i < n; ++i) {
    std::vector<int> order(m);
    for (int s = 0; s < m; ++s) order[s] = s;
    rng.shuffle(std::span<int>(order));
    const int len = static_cast<int>(rng.below(m + 1));
    order.resize(len);
    for (int s : order) applicants[s].push_back(i);
    d.preferences.push_back(std::move(order));
  }
  d.priorities.resize(m);
  for (int s = 0; s < m; ++s) {
    auto& a = applicants[s];
    rng.shuffle(std::span<int>(a));
    std::vector<int> group;
    for (std::size_t k = 0; k < a.size(); ++k) {
      group.push_back(a[k]);
      if (k + 1 == a.size() || rng.uniform() >= tie_prob) {
        d.priorities[s].push_back(std::move(group));
        group.clear();
      }
    }
  }
  return MarketInstance(std::move(d));
}

/// Weak stability straight from the definition; no shared code with the
/// library's check beyond the instance accessors.
inline bool brute_stable(const MarketInstance& inst, const Matching& m) {
  const int n = inst.num_students();
  std::vector<int> load(inst.num_schools(), 0);
  for (int i = 0; i < n; ++i) {
    if (m[i] >= 0) {
      if (!inst.is_edge(i, m[i])) return false;
      ++load[m[i]];
    }
  }
  for (int s = 0; s < inst.num_schools(); ++s) {
    if (load[s] > inst.capacity(s)) return false;
  }
  for (int i = 0; i < n; ++i) {
    const int own = m[i] >= 0 ? inst.rank(i, m[i]) : 1 << 20;
    for (int s : inst.preferences(i)) {
      if (inst.rank(i, s) >= own) continue;
      if (load[s] < inst.capacity(s)) return false;
      for (int j = 0; j < n; ++j) {
        if (m[j] == s && inst.priority_class(i, s) < inst.priority_class(j, s)) return false;
      }
    }
  }
  return true;
}

/// All matchings (each student: one listed school or none), capacity ignored;
/// callers filter.
template <typename F>
void for_each_assignment(const MarketInstance& inst, F&& visit) {
  const int n = inst.num_students();
  std::vector<int> digit(n, 0);
  while (true) {
    Matching m(n);
    for (int i = 0; i < n; ++i) {
      const auto prefs = inst.preferences(i);
      if (digit[i] < static_cast<int>(prefs.size())) m.assign(i, prefs[digit[i]]);
    }
    visit(m);
    int pos = 0;
    while (pos < n && ++digit[pos] > static_cast<int>(inst.preferences(pos).size())) digit[pos++] = 0;
    if (pos == n) return;
  }
}

inline std::vector<Matching> brute_stable_set(const MarketInstance& inst) {
  std::vector<Matching> out;
  for_each_assignment(inst, [&](const Matching& m) {
    if (brute_stable(inst, m)) out.push_back(m);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace testing_support
