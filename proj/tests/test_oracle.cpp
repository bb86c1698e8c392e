#include <gtest/gtest.h>

#include <algorithm>

#include "pirmes/mechanisms.hpp"
#include "pirmes/oracle.hpp"
#include "support.hpp"

using namespace pirmes;
using namespace testing_support;

TEST(Enumerate, Example1ContainsTheDaMatchings) {
  const auto set = enumerate_weakly_stable(example1());
  for (const auto& m : example1_da_matchings()) {
    EXPECT_TRUE(std::binary_search(set.matchings.begin(), set.matchings.end(), m));
  }
  // Regression value; cross-checked by the filter test below.
  EXPECT_EQ(set.matchings.size(), 8u);
}

TEST(Enumerate, SingleAcceptablePair) {
  const auto set = enumerate_weakly_stable(build(1, 1, {{1}}, {{{1}}}));
  ASSERT_EQ(set.matchings.size(), 1u);
  EXPECT_EQ(set.matchings[0], matching({1}));
}

TEST(Enumerate, AgreesWithFilterAndDefinition) {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng, 5, 4);
    const auto a = enumerate_weakly_stable(inst).matchings;
    EXPECT_EQ(a, enumerate_by_filter(inst).matchings);
    EXPECT_EQ(a, brute_stable_set(inst));
  }
}

TEST(Enumerate, BudgetIsEnforced) {
  EXPECT_THROW(enumerate_weakly_stable(example1(), 3), Error);
}

TEST(ExPost, Example1OptimumIsExPostStable) {
  const auto inst = example1();
  const auto ms = example1_da_matchings();
  const RandomMatching<double> q = 0.5 * indicator<double>(inst, ms[2]) + 0.5 * indicator<double>(inst, ms[3]);
  const auto r = is_ex_post_stable(inst, q, enumerate_weakly_stable(inst));
  ASSERT_TRUE(r.ex_post_stable);
  RandomMatching<double> back = RandomMatching<double>::Zero(4, 4);
  for (std::size_t l = 0; l < r.matchings.size(); ++l) back += r.weights[l] * indicator<double>(inst, r.matchings[l]);
  EXPECT_LE((back - q).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ExPost, FdatHalfHalf) {
  const auto inst = fdat();
  const RandomMatching<double> p = 0.5 * indicator<double>(inst, fdat_m1()) + 0.5 * indicator<double>(inst, fdat_m2());
  EXPECT_TRUE(brute_stable(inst, fdat_m1()));
  EXPECT_TRUE(brute_stable(inst, fdat_m2()));
  const auto set = enumerate_weakly_stable(inst);
  const auto r = is_ex_post_stable(inst, p, set);
  EXPECT_TRUE(r.ex_post_stable);
  const auto opt = exact_constrained_optimum(inst, p, set);
  EXPECT_TRUE(opt.constrained_sd_efficient);
  EXPECT_NEAR(opt.solution.average_rank, average_rank(inst, p), 1e-9);
}

TEST(ExPost, UnstablePointMassIsRejected) {
  const auto inst = example1();
  const auto r = is_ex_post_stable(inst, indicator<double>(inst, matching({2, 1, 3, 4})), enumerate_weakly_stable(inst));
  EXPECT_FALSE(r.ex_post_stable);
  EXPECT_TRUE(r.matchings.empty());
}

TEST(ExPost, IncompleteSetIsRefused) {
  StableSet partial{{example1_da_matchings()[0]}, false};
  EXPECT_THROW(is_ex_post_stable(example1(), indicator<double>(example1(), partial.matchings[0]), partial), Error);
}

TEST(ConstrainedOptimum, Example1) {
  const auto inst = example1();
  const RandomMatching<double> p = exact_da_distribution(inst).prob.cast<double>();
  const auto opt = exact_constrained_optimum(inst, p, enumerate_weakly_stable(inst));
  EXPECT_NEAR(opt.solution.average_rank, 1.5, 1e-9);
  EXPECT_TRUE(opt.dominated_by_ex_post_stable);
  EXPECT_FALSE(opt.constrained_sd_efficient);
}

TEST(ConstrainedOptimum, StrictMarketDaIsEfficient) {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng, 5, 4, 2, 0.0);
    const auto da = deferred_acceptance(inst);
    const auto p = indicator<double>(inst, da);
    const auto opt = exact_constrained_optimum(inst, p, enumerate_weakly_stable(inst));
    EXPECT_TRUE(opt.constrained_sd_efficient);
    EXPECT_LE((opt.solution.q - p).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ConstrainedOptimum, ChainOfBounds) {
  Rng rng(72);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 6, 4);
    const auto set = enumerate_weakly_stable(inst);
    const auto dist = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 40, trial);
    const RandomMatching<double> p = dist.prob.cast<double>();
    std::vector<Matching> warm;
    for (const auto& wm : dist.support) warm.push_back(wm.matching);
    const auto opt = exact_constrained_optimum(inst, p, set);
    const auto heur = pirmes_heur(inst, p, warm);
    EXPECT_LE(opt.solution.average_rank, heur.average_rank + 1e-9);
    EXPECT_LE(heur.average_rank, average_rank(inst, p) + 1e-9);
    for (std::size_t l = 0; l < opt.solution.support.size(); ++l) {
      EXPECT_TRUE(std::binary_search(set.matchings.begin(), set.matchings.end(), opt.solution.support[l]));
    }
  }
}

TEST(BestImprovement, SixStudentFixture) {
  const auto best = best_stable_pareto_improvement(sic6(), sic6_matching());
  EXPECT_EQ(average_rank(sic6(), best), Rational(7, 6));
}

TEST(BestImprovement, EfficientMatchingIsItsOwnBest) {
  const auto m2 = example1_da_matchings()[1];
  EXPECT_EQ(best_stable_pareto_improvement(example1(), m2), m2);
  const auto m3 = matching({2, 1, 3, 4, 5, 6});
  EXPECT_EQ(best_stable_pareto_improvement(sic6(), m3), m3);
}
