#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "pirmes/mechanisms.hpp"
#include "pirmes/oracle.hpp"
#include "support.hpp"

using namespace pirmes;
using namespace testing_support;

namespace {

MarketInstance kesten() {
  return build(3, 3, {{2, 1, 3}, {1, 2, 3}, {1, 2, 3}}, {{{1}, {3}, {2}}, {{2}, {1}, {3}}, {{1}, {2}, {3}}});
}

std::vector<int> ranks(const MarketInstance& inst, const Matching& m) {
  std::vector<int> r;
  for (int i = 0; i < inst.num_students(); ++i) r.push_back(student_rank(inst, m, i));
  return r;
}

}  // namespace

TEST(DeferredAcceptance, StrictInstanceOutcome) {
  const auto inst = kesten();
  const auto m = deferred_acceptance(inst);
  EXPECT_EQ(ranks(inst, m), (std::vector<int>{2, 2, 3}));
  EXPECT_TRUE(is_weakly_stable(inst, m).stable);
}

TEST(DeferredAcceptance, RejectsTies) {
  EXPECT_THROW(deferred_acceptance(example1()), Error);
  EXPECT_THROW(eada(example1()), Error);
}

TEST(DeferredAcceptance, TieBreakingRefinesPriorities) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng, 6, 4);
    const auto tb = TieBreaking::random(inst.num_students(), inst.num_schools(),
                                        trial % 2 ? TieBreaking::Mode::kMultiple : TieBreaking::Mode::kSingle, rng);
    const auto strict = break_ties(inst, tb);
    EXPECT_TRUE(strict.has_strict_priorities());
    const auto a = deferred_acceptance(strict);
    EXPECT_EQ(a, deferred_acceptance(inst, tb));
    EXPECT_TRUE(is_weakly_stable(strict, a).stable);
    EXPECT_TRUE(brute_stable(inst, a));
  }
}

TEST(DeferredAcceptance, StudentOptimalAmongStrictStableMatchings) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng, 5, 4, 2, 0.0);
    const auto da = deferred_acceptance(inst);
    for (const auto& m : brute_stable_set(inst)) {
      for (int i = 0; i < inst.num_students(); ++i) {
        EXPECT_LE(student_rank(inst, da, i), student_rank(inst, m, i));
      }
    }
  }
}

TEST(DaDistribution, Example1ExactLottery) {
  const auto inst = example1();
  const auto dist = exact_da_distribution(inst);
  EXPECT_TRUE(dist.provenance.exact);
  EXPECT_EQ(dist.provenance.draws, 24);
  const auto expected = example1_da_matchings();
  const Rational w[] = {Rational(1, 8), Rational(1, 8), Rational(1, 4), Rational(1, 4), Rational(1, 8), Rational(1, 8)};
  ASSERT_EQ(dist.support.size(), 6u);
  Rational total(0);
  for (const auto& wm : dist.support) {
    const auto it = std::find(expected.begin(), expected.end(), wm.matching);
    ASSERT_NE(it, expected.end());
    EXPECT_EQ(wm.weight, w[it - expected.begin()]);
    total += wm.weight;
  }
  EXPECT_EQ(total, Rational(1));
  EXPECT_EQ(dist.prob(0, 0), Rational(1, 2));
  EXPECT_EQ(dist.prob(0, 2), Rational(3, 8));
  EXPECT_EQ(dist.prob(0, 3), Rational(1, 8));
  EXPECT_EQ(average_rank(inst, dist.prob), Rational(13, 8));
}

TEST(DaDistribution, StrictInstanceIsPointMass) {
  const auto inst = kesten();
  const auto dist = exact_da_distribution(inst);
  ASSERT_EQ(dist.support.size(), 1u);
  EXPECT_EQ(dist.support[0].weight, Rational(1));
}

TEST(DaDistribution, BudgetExceededPointsAtSampling) {
  const auto inst = example1();
  try {
    exact_da_distribution(inst, TieBreaking::Mode::kSingle, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sample"), std::string::npos);
  }
}

TEST(DaDistribution, MultipleModeSupportIsStable) {
  const auto inst = example1();
  const auto dist = exact_da_distribution(inst, TieBreaking::Mode::kMultiple);
  EXPECT_EQ(dist.provenance.draws, count_tie_breakings(inst, TieBreaking::Mode::kMultiple));
  Rational total(0);
  for (const auto& wm : dist.support) {
    EXPECT_TRUE(is_weakly_stable(inst, wm.matching).stable);
    total += wm.weight;
  }
  EXPECT_EQ(total, Rational(1));
}

TEST(DaDistribution, SampledIsDeterministicAndThreadIndependent) {
  const auto inst = example1();
  const auto a = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 500, 42, 1);
  const auto b = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 500, 42, 4);
  ASSERT_EQ(a.support.size(), b.support.size());
  for (std::size_t l = 0; l < a.support.size(); ++l) {
    EXPECT_EQ(a.support[l].matching, b.support[l].matching);
    EXPECT_EQ(a.support[l].weight, b.support[l].weight);
  }
  EXPECT_EQ(a.prob, b.prob);
  EXPECT_EQ(a.provenance.seed, 42u);
  EXPECT_FALSE(a.provenance.exact);
}

TEST(DaDistribution, SingleSampleIsPointMass) {
  const auto dist = sample_da_distribution(example1(), TieBreaking::Mode::kSingle, 1, 9);
  ASSERT_EQ(dist.support.size(), 1u);
  EXPECT_EQ(dist.support[0].weight, Rational(1));
}

TEST(DaDistribution, SampledConvergesToExact) {
  const auto inst = example1();
  const RandomMatching<double> exact = exact_da_distribution(inst).prob.cast<double>();
  auto tv = [&](int n, std::uint64_t seed) {
    const RandomMatching<double> s = sample_da_distribution(inst, TieBreaking::Mode::kSingle, n, seed).prob.cast<double>();
    return (s - exact).cwiseAbs().maxCoeff();
  };
  // 5 sigma of a binomial proportion at n = 1000.
  EXPECT_LT(tv(1000, 1), 5 * std::sqrt(0.25 / 1000));
  double small = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small += tv(100, seed);
    large += tv(10000, seed);
  }
  EXPECT_LT(large, small);
}

TEST(DaDistribution, EverySupportMatchingIsStable) {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 6, 4);
    const auto dist = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 50, trial);
    for (const auto& wm : dist.support) EXPECT_TRUE(is_weakly_stable(inst, wm.matching).stable);
  }
}

TEST(Eada, KestenInstance) {
  const auto inst = kesten();
  EXPECT_EQ(ranks(inst, eada(inst)), (std::vector<int>{1, 1, 3}));
}

// Independent check: the only Pareto improvements over DA that keep
// student 3 at s3 swap students 1 and 2.
TEST(Eada, KestenAgreesWithExhaustiveSearch) {
  const auto inst = kesten();
  const auto da = deferred_acceptance(inst);
  int best_total = 1 << 20;
  Matching best(3);
  for_each_assignment(inst, [&](const Matching& m) {
    if (m[2] != da[2]) return;
    const auto loads = school_loads(inst, m);
    for (int s = 0; s < 3; ++s) {
      if (loads[s] > 1) return;
    }
    for (int i = 0; i < 3; ++i) {
      if (student_rank(inst, m, i) > student_rank(inst, da, i)) return;
    }
    if (total_rank(inst, m) < best_total) {
      best_total = total_rank(inst, m);
      best = m;
    }
  });
  EXPECT_EQ(best, eada(inst));
}

TEST(Eada, Example1EqualsDaForEveryTieBreaking) {
  const auto inst = example1();
  std::vector<int> order(4);
  std::iota(order.begin(), order.end(), 0);
  do {
    const auto tb = TieBreaking::single(order);
    EXPECT_EQ(eada(inst, tb), deferred_acceptance(inst, tb));
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Eada, WeaklyDominatesDa) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(rng, 7, 5);
    const auto tb = TieBreaking::random(inst.num_students(), inst.num_schools(), TieBreaking::Mode::kSingle, rng);
    const auto da = deferred_acceptance(inst, tb);
    const auto e = eada(inst, tb);
    check_matching(inst, e);
    for (int i = 0; i < inst.num_students(); ++i) {
      EXPECT_LE(student_rank(inst, e, i), student_rank(inst, da, i));
    }
  }
}
