#include "pirmes/mechanisms.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <thread>

namespace pirmes {

// ---------------------------------------------------------------------------
// Tie-breaking

TieBreaking TieBreaking::single(std::vector<int> order) {
  TieBreaking tb;
  tb.mode = Mode::kSingle;
  tb.orders.push_back(std::move(order));
  return tb;
}

TieBreaking TieBreaking::identity(int num_students) {
  std::vector<int> order(num_students);
  std::iota(order.begin(), order.end(), 0);
  return single(std::move(order));
}

TieBreaking TieBreaking::random(int num_students, int num_schools, Mode mode, Rng& rng) {
  TieBreaking tb;
  tb.mode = mode;
  const int count = mode == Mode::kSingle ? 1 : num_schools;
  tb.orders.resize(count);
  for (auto& order : tb.orders) {
    order.resize(num_students);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
  }
  return tb;
}

std::vector<int> TieBreaking::positions(int school, int num_students) const {
  const auto& order = mode == Mode::kSingle ? orders.at(0) : orders.at(school);
  std::vector<int> pos(num_students, 0);
  for (int k = 0; k < static_cast<int>(order.size()); ++k) pos[order[k]] = k;
  return pos;
}

const char* to_string(TieBreaking::Mode mode) {
  return mode == TieBreaking::Mode::kSingle ? "single" : "multiple";
}

void check_tie_breaking(const MarketInstance& instance, const TieBreaking& tb) {
  const int n = instance.num_students();
  const std::size_t expected =
      tb.mode == TieBreaking::Mode::kSingle ? 1 : static_cast<std::size_t>(instance.num_schools());
  if (tb.orders.size() != expected) throw Error("tie-breaking: wrong number of permutations");
  for (const auto& order : tb.orders) {
    if (static_cast<int>(order.size()) != n) throw Error("tie-breaking: permutation size");
    std::vector<char> seen(n, 0);
    for (int i : order) {
      if (i < 0 || i >= n || seen[i]) throw Error("tie-breaking: not a permutation");
      seen[i] = 1;
    }
  }
}

MarketInstance break_ties(const MarketInstance& instance, const TieBreaking& tb) {
  check_tie_breaking(instance, tb);
  MarketData data = instance.data();
  for (int s = 0; s < instance.num_schools(); ++s) {
    const auto pos = tb.positions(s, instance.num_students());
    std::vector<std::vector<int>> strict;
    for (auto group : instance.priority_classes(s)) {
      std::sort(group.begin(), group.end(), [&](int a, int b) { return pos[a] < pos[b]; });
      for (int i : group) strict.push_back({i});
    }
    data.priorities[s] = std::move(strict);
  }
  return MarketInstance(std::move(data));
}

// ---------------------------------------------------------------------------
// Deferred acceptance

namespace {

struct DaOutcome {
  Matching matching;
  std::vector<char> rejected;  ///< school rejected at least one proposal
};

/// Lower key = higher priority. Students a school does not rank get the
/// worst possible key so they are never preferred to listed students.
class PriorityKeys {
 public:
  PriorityKeys(const MarketInstance& instance, const TieBreaking& tb)
      : n_(instance.num_students()), keys_(instance.num_schools()) {
    const int huge = (instance.num_students() + 1) * (n_ + 1);
    std::vector<int> shared;
    if (tb.mode == TieBreaking::Mode::kSingle) shared = tb.positions(0, n_);
    for (int s = 0; s < instance.num_schools(); ++s) {
      const auto pos = tb.mode == TieBreaking::Mode::kSingle ? shared : tb.positions(s, n_);
      auto& row = keys_[s];
      row.assign(n_, huge);
      for (int i = 0; i < n_; ++i) {
        const int cls = instance.priority_class(i, s);
        if (cls > 0) row[i] = cls * (n_ + 1) + pos[i];
      }
    }
  }

  int operator()(int student, int school) const { return keys_[school][student]; }

 private:
  int n_;
  std::vector<std::vector<int>> keys_;
};

DaOutcome run_da(const MarketInstance& instance, const PriorityKeys& key,
                 const std::vector<char>& student_active, const std::vector<char>& school_active) {
  const int n = instance.num_students();
  const int m = instance.num_schools();
  std::vector<std::size_t> next(n, 0);
  std::vector<std::vector<int>> held(m);
  DaOutcome out{Matching(n), std::vector<char>(m, 0)};

  std::deque<int> queue;
  for (int i = 0; i < n; ++i) {
    if (student_active[i]) queue.push_back(i);
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const auto prefs = instance.preferences(i);
    while (next[i] < prefs.size() && !school_active[prefs[next[i]]]) ++next[i];
    if (next[i] == prefs.size()) continue;  // list exhausted, stays unassigned
    const int s = prefs[next[i]++];
    auto& seats = held[s];
    if (static_cast<int>(seats.size()) < instance.capacity(s)) {
      seats.push_back(i);
      continue;
    }
    out.rejected[s] = 1;
    if (seats.empty()) {
      queue.push_back(i);
      continue;
    }
    auto worst = std::max_element(seats.begin(), seats.end(),
                                  [&](int a, int b) { return key(a, s) < key(b, s); });
    if (key(i, s) < key(*worst, s)) {
      queue.push_back(*worst);
      *worst = i;
    } else {
      queue.push_back(i);
    }
  }
  for (int s = 0; s < m; ++s) {
    for (int i : held[s]) out.matching.assign(i, s);
  }
  return out;
}

void require_strict(const MarketInstance& instance, const char* what) {
  if (!instance.has_strict_priorities()) {
    throw Error(std::string(what) + " requires strict priorities; break ties first");
  }
}

}  // namespace

Matching deferred_acceptance(const MarketInstance& instance, const TieBreaking& tb) {
  check_tie_breaking(instance, tb);
  const PriorityKeys keys(instance, tb);
  return run_da(instance, keys, std::vector<char>(instance.num_students(), 1),
                std::vector<char>(instance.num_schools(), 1))
      .matching;
}

Matching deferred_acceptance(const MarketInstance& strict_instance) {
  require_strict(strict_instance, "deferred_acceptance");
  return deferred_acceptance(strict_instance, TieBreaking::identity(strict_instance.num_students()));
}

Matching eada(const MarketInstance& instance, const TieBreaking& tb) {
  check_tie_breaking(instance, tb);
  const PriorityKeys keys(instance, tb);
  const int n = instance.num_students();
  const int m = instance.num_schools();
  std::vector<char> student_active(n, 1);
  std::vector<char> school_active(m, 1);
  Matching result(n);
  int remaining = n;
  while (remaining > 0) {
    const DaOutcome round = run_da(instance, keys, student_active, school_active);
    bool progress = false;
    for (int s = 0; s < m; ++s) {
      if (!school_active[s] || round.rejected[s]) continue;
      school_active[s] = 0;
      progress = true;
      for (int i = 0; i < n; ++i) {
        if (student_active[i] && round.matching[i] == s) {
          result.assign(i, s);
          student_active[i] = 0;
          --remaining;
        }
      }
    }
    if (progress) continue;
    // Every active school rejected someone: the students DA leaves unassigned
    // cannot be placed anywhere, settle them as unassigned.
    for (int i = 0; i < n; ++i) {
      if (student_active[i] && round.matching[i] == kUnassigned) {
        student_active[i] = 0;
        --remaining;
        progress = true;
      }
    }
    if (!progress) {
      // Not reachable for valid instances; keep the current DA outcome.
      for (int i = 0; i < n; ++i) {
        if (student_active[i]) result.assign(i, round.matching[i]);
      }
      break;
    }
  }
  return result;
}

Matching eada(const MarketInstance& strict_instance) {
  require_strict(strict_instance, "eada");
  return eada(strict_instance, TieBreaking::identity(strict_instance.num_students()));
}

// ---------------------------------------------------------------------------
// Distributions

DaDistribution distribution_from_draws(const MarketInstance& instance,
                                       const std::vector<Matching>& draws,
                                       DaDistribution::Provenance provenance) {
  if (draws.empty()) throw Error("distribution needs at least one draw");
  std::map<Matching, std::int64_t> counts;
  for (const auto& m : draws) ++counts[m];
  DaDistribution dist;
  provenance.draws = static_cast<std::int64_t>(draws.size());
  dist.provenance = provenance;
  dist.prob = RandomMatching<Rational>::Zero(instance.num_students(), instance.num_schools());
  for (const auto& [m, count] : counts) {
    const Rational w(count, provenance.draws);
    dist.support.push_back({m, w});
    for (int i = 0; i < m.size(); ++i) {
      if (m[i] != kUnassigned) dist.prob(i, m[i]) += w;
    }
  }
  return dist;
}

std::int64_t count_tie_breakings(const MarketInstance& instance, TieBreaking::Mode mode) {
  auto factorial = [](std::int64_t k) -> std::int64_t {
    std::int64_t f = 1;
    for (std::int64_t j = 2; j <= k; ++j) {
      if (f > std::numeric_limits<std::int64_t>::max() / j) return -1;
      f *= j;
    }
    return f;
  };
  if (mode == TieBreaking::Mode::kSingle) return factorial(instance.num_students());
  std::int64_t total = 1;
  for (int s = 0; s < instance.num_schools(); ++s) {
    for (const auto& group : instance.priority_classes(s)) {
      const std::int64_t f = factorial(static_cast<std::int64_t>(group.size()));
      if (f < 0 || total > std::numeric_limits<std::int64_t>::max() / f) return -1;
      total *= f;
    }
  }
  return total;
}

DaDistribution exact_da_distribution(const MarketInstance& instance, TieBreaking::Mode mode,
                                     std::int64_t budget) {
  const std::int64_t count = count_tie_breakings(instance, mode);
  if (count < 0 || count > budget) {
    throw Error("exact DA distribution needs " +
                (count < 0 ? std::string("too many") : std::to_string(count)) +
                " tie-breakings (budget " + std::to_string(budget) +
                "); use sample_da_distribution instead");
  }
  const int n = instance.num_students();
  std::vector<Matching> draws;
  draws.reserve(static_cast<std::size_t>(count));

  if (mode == TieBreaking::Mode::kSingle) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
      draws.push_back(deferred_acceptance(instance, TieBreaking::single(order)));
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    // Odometer over the within-class orders of every (school, class) slot.
    std::vector<std::vector<int>> slots;
    std::vector<int> slot_school;
    for (int s = 0; s < instance.num_schools(); ++s) {
      for (auto group : instance.priority_classes(s)) {
        std::sort(group.begin(), group.end());
        slots.push_back(std::move(group));
        slot_school.push_back(s);
      }
    }
    while (true) {
      TieBreaking tb;
      tb.mode = TieBreaking::Mode::kMultiple;
      tb.orders.assign(instance.num_schools(), {});
      for (std::size_t k = 0; k < slots.size(); ++k) {
        auto& order = tb.orders[slot_school[k]];
        order.insert(order.end(), slots[k].begin(), slots[k].end());
      }
      for (auto& order : tb.orders) {
        std::vector<char> present(n, 0);
        for (int i : order) present[i] = 1;
        for (int i = 0; i < n; ++i) {
          if (!present[i]) order.push_back(i);
        }
      }
      draws.push_back(deferred_acceptance(instance, tb));
      std::size_t k = 0;
      while (k < slots.size() && !std::next_permutation(slots[k].begin(), slots[k].end())) ++k;
      if (k == slots.size()) break;
    }
  }
  return distribution_from_draws(instance, draws, {true, mode, count, 0});
}

std::vector<TieBreaking> sample_tie_breakings(const MarketInstance& instance,
                                              TieBreaking::Mode mode, int n_samples,
                                              std::uint64_t seed) {
  std::vector<TieBreaking> out;
  out.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    out.push_back(
        TieBreaking::random(instance.num_students(), instance.num_schools(), mode, rng));
  }
  return out;
}

DaDistribution sample_da_distribution(const MarketInstance& instance, TieBreaking::Mode mode,
                                      int n_samples, std::uint64_t seed, int threads) {
  if (n_samples < 1) throw Error("sample_da_distribution: n_samples must be >= 1");
  const auto tie_breakings = sample_tie_breakings(instance, mode, n_samples, seed);
  std::vector<Matching> draws(n_samples);
  const int workers = std::clamp(threads, 1, n_samples);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int k = w; k < n_samples; k += workers) {
        draws[k] = deferred_acceptance(instance, tie_breakings[k]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return distribution_from_draws(instance, draws, {false, mode, n_samples, seed});
}

}  // namespace pirmes
