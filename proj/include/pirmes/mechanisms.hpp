#pragma once

// Deferred Acceptance with tie-breaking, DA lottery distributions (exact and
// sampled) and the simplified EADA mechanism.

#include <cstdint>
#include <vector>

#include "pirmes/market.hpp"
#include "pirmes/random.hpp"

namespace pirmes {

/// Strict refinement of every priority list. In single mode one permutation of
/// students is used at every school; in multiple mode each school has its own.
/// A permutation lists students from highest to lowest tie-break priority.
struct TieBreaking {
  enum class Mode { kSingle, kMultiple };

  Mode mode = Mode::kSingle;
  std::vector<std::vector<int>> orders;

  static TieBreaking single(std::vector<int> order);
  static TieBreaking identity(int num_students);
  static TieBreaking random(int num_students, int num_schools, Mode mode, Rng& rng);

  /// Position of every student in the permutation used at school s.
  std::vector<int> positions(int school, int num_students) const;
};

const char* to_string(TieBreaking::Mode mode);

/// Throws Error when a permutation is not a bijection over the students.
void check_tie_breaking(const MarketInstance& instance, const TieBreaking& tb);

/// Refines each indifference class by the permutation; output classes are
/// singletons.
MarketInstance break_ties(const MarketInstance& instance, const TieBreaking& tb);

/// Student-proposing DA on an instance with strict priorities. Proposals are
/// processed from a FIFO queue. Throws Error on non-strict input.
Matching deferred_acceptance(const MarketInstance& strict_instance);

/// DA on the tie-broken version of `instance` without materializing it.
Matching deferred_acceptance(const MarketInstance& instance, const TieBreaking& tb);

/// Simplified EADA: run DA, settle students at schools that rejected nobody,
/// remove those schools and students, repeat. Throws Error on non-strict input.
Matching eada(const MarketInstance& strict_instance);
Matching eada(const MarketInstance& instance, const TieBreaking& tb);

struct WeightedMatching {
  Matching matching;
  Rational weight;
};

struct DaDistribution {
  struct Provenance {
    bool exact = true;
    TieBreaking::Mode mode = TieBreaking::Mode::kSingle;
    std::int64_t draws = 0;  ///< tie-breakings enumerated or sampled
    std::uint64_t seed = 0;  ///< meaningful for sampled distributions only
  };

  RandomMatching<Rational> prob;
  std::vector<WeightedMatching> support;  ///< sorted by matching
  Provenance provenance;
};

/// Groups identical matchings; weight = multiplicity / draws.
DaDistribution distribution_from_draws(const MarketInstance& instance,
                                       const std::vector<Matching>& draws,
                                       DaDistribution::Provenance provenance);

/// Number of distinct tie-breakings the exact enumeration would visit, or -1
/// on overflow.
std::int64_t count_tie_breakings(const MarketInstance& instance, TieBreaking::Mode mode);

/// Enumerates every tie-breaking (single: all student permutations; multiple:
/// all within-class orders per school). Throws Error when the count exceeds
/// `budget`, pointing the caller at sample_da_distribution.
DaDistribution exact_da_distribution(const MarketInstance& instance,
                                     TieBreaking::Mode mode = TieBreaking::Mode::kSingle,
                                     std::int64_t budget = 40320);

/// Draw k uses its own generator seeded with derive_seed(seed, k), so the
/// result does not depend on `threads`.
std::vector<TieBreaking> sample_tie_breakings(const MarketInstance& instance,
                                              TieBreaking::Mode mode, int n_samples,
                                              std::uint64_t seed);

DaDistribution sample_da_distribution(const MarketInstance& instance, TieBreaking::Mode mode,
                                      int n_samples, std::uint64_t seed, int threads = 1);

/// Point mass on a single matching.
inline RandomMatching<Rational> point_mass(const MarketInstance& instance, const Matching& m) {
  return indicator<Rational>(instance, m);
}

}  // namespace pirmes
