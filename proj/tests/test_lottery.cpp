#include <gtest/gtest.h>

#include <algorithm>

#include "pirmes/lottery.hpp"
#include "pirmes/mechanisms.hpp"
#include "pirmes/oracle.hpp"
#include "support.hpp"

using namespace pirmes;
using namespace testing_support;

namespace {

RandomMatching<double> example1_p() { return exact_da_distribution(example1()).prob.cast<double>(); }

// Two students with identical lists and priorities, plus a third who breaks
// symmetry at s1.
MarketInstance twins() {
  return build(3, 3, {{1, 2, 3}, {1, 2, 3}, {2, 1, 3}}, {{{3}, {1, 2}}, {{1, 2, 3}}, {{1, 2, 3}}});
}

void expect_valid_lottery(const MarketInstance& inst, const LotterySolution& sol, double tol = 1e-9) {
  ASSERT_EQ(sol.support.size(), sol.weights.size());
  double total = 0;
  for (std::size_t l = 0; l < sol.support.size(); ++l) {
    EXPECT_TRUE(brute_stable(inst, sol.support[l]));
    EXPECT_GT(sol.weights[l], 0.0);
    total += sol.weights[l];
  }
  EXPECT_NEAR(total, 1.0, tol);
  EXPECT_LE((expand(inst, sol.support, sol.weights) - sol.q).cwiseAbs().maxCoeff(), tol);
}

}  // namespace

TEST(EqualTreatment, RestrictedListsAndPairs) {
  const auto inst = twins();
  RandomMatching<double> p = RandomMatching<double>::Zero(3, 3);
  p(0, 0) = p(1, 0) = 0.5;
  p(0, 1) = p(1, 1) = 0.5;
  p(2, 1) = 0.0;
  p(2, 2) = 1.0;
  EXPECT_EQ(restricted_list(inst, p, 0), (std::vector<int>{0, 1}));
  EXPECT_EQ(restricted_list(inst, p, 2), (std::vector<int>{1, 0, 2}));
  const auto pairs = identical_pairs(inst, p);
  EXPECT_TRUE(pairs(0, 1));
  EXPECT_TRUE(pairs(1, 0));
  EXPECT_FALSE(pairs(0, 2));
  EXPECT_EQ(pairs.pairs(), (std::vector<std::pair<int, int>>{{0, 1}}));
  EXPECT_EQ(equality_rows(pairs).size(), 2u);
}

TEST(EqualTreatment, DifferentPriorityBreaksThePair) {
  const auto inst = example1();
  const auto pairs = identical_pairs(inst, example1_p());
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(pairs(i, j), pairs(j, i));
  }
  EXPECT_FALSE(pairs(0, 1));  // different lists
}

TEST(Master, Example1FullSupport) {
  const auto inst = example1();
  const auto sol = solve_master(inst, example1_da_matchings(), example1_p());
  EXPECT_EQ(sol.status, MasterSolution::Status::kOptimal);
  EXPECT_NEAR(sol.objective / 4, 1.5, 1e-9);
  EXPECT_NEAR(sol.weights.sum(), 1.0, 1e-9);
  EXPECT_GE(sol.duals.mu.minCoeff(), -1e-9);
  // 1/2 M3 + 1/2 M4 is one optimum; check it is feasible and attains 6.
  const auto ms = example1_da_matchings();
  const RandomMatching<double> q = 0.5 * indicator<double>(inst, ms[2]) + 0.5 * indicator<double>(inst, ms[3]);
  EXPECT_TRUE(weakly_dominates(sd_compare(inst, q, example1_p())));
  EXPECT_NEAR(average_rank(inst, q), 1.5, 1e-12);
}

TEST(Master, PointMassSupport) {
  const auto inst = example1();
  const auto m = example1_da_matchings()[4];
  const auto sol = solve_master(inst, {m}, indicator<double>(inst, m));
  EXPECT_EQ(sol.status, MasterSolution::Status::kOptimal);
  EXPECT_NEAR(sol.weights(0), 1.0, 1e-9);
  EXPECT_NEAR(sol.objective, total_rank(inst, m), 1e-9);
}

TEST(Master, SingleMatchingCannotCoverDaLottery) {
  const auto inst = example1();
  const auto sol = solve_master(inst, {example1_da_matchings()[0]}, example1_p());
  EXPECT_EQ(sol.status, MasterSolution::Status::kArtificialActive);
  EXPECT_GT(sol.artificial_weight, 1e-9);
  EXPECT_THROW(solve_master(inst, {}, example1_p()), Error);
}

TEST(ReducedCost, ZeroDualsGiveMinusRank) {
  const auto inst = example1();
  Duals d;
  d.mu = Eigen::VectorXd::Zero(inst.num_edges());
  for (const auto& m : example1_da_matchings()) {
    EXPECT_NEAR(reduced_cost(inst, m, d), -total_rank(inst, m), 1e-12);
  }
}

TEST(ReducedCost, MatchesColumnTimesDuals) {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = augment_with_dummy(random_instance(rng, 5, 3));
    const auto set = enumerate_weakly_stable(inst);
    const RandomMatching<double> p = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 20, trial).prob.cast<double>();
    const auto rows = equality_rows(identical_pairs(inst, p));
    MasterProblem master(inst, p, rows);
    master.add(set.matchings.front());
    const auto sol = master.solve();
    Eigen::VectorXd y(inst.num_edges() + 1 + static_cast<int>(rows.size()));
    y << sol.duals.mu, sol.duals.delta, sol.duals.eta;
    for (const auto& m : set.matchings) {
      EXPECT_NEAR(reduced_cost(inst, m, sol.duals, rows), master.column(m).dot(y) - total_rank(inst, m), 1e-7);
    }
    // Columns in the basis price out at zero.
    for (std::size_t l = 0; l < master.support().size(); ++l) {
      if (sol.weights(l) > 1e-7) EXPECT_NEAR(reduced_cost(inst, master.support()[l], sol.duals, rows), 0.0, 1e-6);
    }
  }
}

TEST(CutoffModel, AdmitsExactlyTheStableMatchings) {
  Rng rng(41);
  for (int trial = 0; trial < 150; ++trial) {
    const auto inst = random_instance(rng, 5, 4);
    const auto model = build_cutoff_constraints(inst);
    for_each_assignment(inst, [&](const Matching& m) { EXPECT_EQ(model.admits(m), brute_stable(inst, m)); });
  }
}

// admits() reasons about the rows directly; here the MIP itself decides
// feasibility with the edge variables pinned.
TEST(CutoffModel, PinnedMipAgreesWithAdmits) {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, 4, 3);
    const auto base = build_cutoff_constraints(inst);
    for_each_assignment(inst, [&](const Matching& m) {
      auto model = base;
      for (int e = 0; e < inst.num_edges(); ++e) {
        const auto [i, s] = inst.edges()[e];
        const int r = model.lp.add_row(lp::Sense::kEqual, m[i] == s ? 1.0 : 0.0);
        model.lp.A(r, model.edge_var[e]) = 1.0;
      }
      model.lp.cost.setZero();
      const auto sol = lp::solve_mip(model.lp, model.integer);
      EXPECT_EQ(sol.status == lp::Status::kOptimal, base.admits(m));
    });
  }
}

TEST(Pricing, MipAgreesWithEnumeration) {
  Rng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = augment_with_dummy(random_instance(rng, 5, 3));
    const auto set = enumerate_weakly_stable(inst);
    const RandomMatching<double> p = sample_da_distribution(inst, TieBreaking::Mode::kSingle, 30, trial).prob.cast<double>();
    MasterProblem master(inst, p);
    master.add(set.matchings.back());
    const auto sol = master.solve();
    for (auto variant : {PricingVariant::kA, PricingVariant::kB}) {
      PricingOptions opt;
      opt.variant = variant;
      opt.zeta = sol.objective / inst.num_students();
      opt.stable_set = &set;
      opt.backend = PricingBackend::kEnumerate;
      const auto a = price(inst, sol.duals, {}, opt);
      opt.backend = PricingBackend::kMip;
      const auto b = price(inst, sol.duals, {}, opt);
      EXPECT_EQ(a.columns.empty(), b.columns.empty());
      EXPECT_TRUE(a.certificate == a.columns.empty());
      if (a.columns.empty() || b.columns.empty()) continue;
      EXPECT_TRUE(brute_stable(inst, b.columns[0]));
      if (variant == PricingVariant::kA) {
        EXPECT_NEAR(reduced_cost(inst, a.columns[0], sol.duals), reduced_cost(inst, b.columns[0], sol.duals), 1e-6);
      } else {
        EXPECT_NEAR(variant_b_score(inst, a.columns[0], sol.duals, opt.zeta),
                    variant_b_score(inst, b.columns[0], sol.duals, opt.zeta), 1e-6);
        EXPECT_GT(reduced_cost(inst, b.columns[0], sol.duals), opt.strict_eps);
      }
    }
  }
}

TEST(Pricing, SampleBackendReturnsImprovingStableColumns) {
  const auto inst = augment_with_dummy(example1());
  const auto p = lift_to_augmented(inst, example1_p());
  MasterProblem master(inst, p);
  master.add(lift_to_augmented(inst, example1_da_matchings()[0]));
  const auto sol = master.solve();
  PricingOptions opt;
  opt.backend = PricingBackend::kSample;
  opt.batch_size = 50;
  opt.zeta = 1.625;
  const auto res = price(inst, sol.duals, {}, opt);
  EXPECT_FALSE(res.certificate);
  ASSERT_FALSE(res.columns.empty());
  for (const auto& m : res.columns) {
    EXPECT_TRUE(is_weakly_stable(inst, m).stable);
    EXPECT_GT(reduced_cost(inst, m, sol.duals), 1e-7);
  }
}

TEST(RunPirmes, Example1ReachesOneAndAHalf) {
  const auto inst = example1();
  const auto p = example1_p();
  for (auto variant : {PricingVariant::kA, PricingVariant::kB}) {
    for (auto backend : {PricingBackend::kEnumerate, PricingBackend::kMip}) {
      PirmesConfig config;
      config.variant = variant;
      config.backend = backend;
      config.batch_size = 1;
      const auto sol = run_pirmes(inst, p, {example1_da_matchings()[0]}, config);
      EXPECT_EQ(sol.status, CgStatus::kOptimal) << to_string(variant) << " " << to_string(backend);
      EXPECT_NEAR(sol.average_rank, 1.5, 1e-6);
      EXPECT_EQ(sd_compare(inst, sol.q, p), SdVerdict::kStrictlyDominates);
      expect_valid_lottery(inst, sol);
    }
  }
}

TEST(RunPirmes, RejectsUnstableWarmStart) {
  EXPECT_THROW(run_pirmes(example1(), example1_p(), {matching({2, 1, 3, 4})}), Error);
}

TEST(RunPirmes, ArtificialActiveReturnsP) {
  // EADA-style base that no stable lottery can dominate: the Kesten market,
  // p = point mass on the Pareto improvement that breaks stability.
  const auto inst = build(3, 3, {{2, 1, 3}, {1, 2, 3}, {1, 2, 3}}, {{{1}, {3}, {2}}, {{2}, {1}, {3}}, {{1}, {2}, {3}}});
  const auto p = indicator<double>(inst, eada(inst));
  const auto sol = run_pirmes(inst, p, {deferred_acceptance(inst)});
  EXPECT_EQ(sol.status, CgStatus::kArtificialActive);
  EXPECT_LE((sol.q - p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(sol.support.empty());
}

TEST(RunPirmes, EqualTreatmentEqualizesTwins) {
  const auto inst = twins();
  const RandomMatching<double> p = exact_da_distribution(inst).prob.cast<double>();
  PirmesConfig config;
  config.equal_treatment = true;
  const auto warm = enumerate_weakly_stable(inst).matchings;
  const auto sol = run_pirmes(inst, p, {warm.front()}, config);
  ASSERT_EQ(sol.status, CgStatus::kOptimal);
  EXPECT_LE((sol.q.row(0) - sol.q.row(1)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(weakly_dominates(sd_compare(inst, sol.q, p)));
  expect_valid_lottery(inst, sol);
}

TEST(RunPirmes, HeuristicBoundsAndDraw) {
  const auto inst = example1();
  const auto p = example1_p();
  const auto heur = pirmes_heur(inst, p, example1_da_matchings());
  EXPECT_EQ(heur.status, CgStatus::kMaxRounds);
  EXPECT_LE(heur.average_rank, average_rank(inst, p) + 1e-9);
  EXPECT_NEAR(heur.average_rank, 1.5, 1e-9);  // M3 and M4 are already in the support
  const auto a = draw_matching(heur, 17), b = draw_matching(heur, 17);
  EXPECT_EQ(a, b);
  EXPECT_NE(std::find(heur.support.begin(), heur.support.end(), a), heur.support.end());
}

TEST(RunPirmes, DrawFrequenciesFollowWeights) {
  const auto sol = run_pirmes(example1(), example1_p(), example1_da_matchings());
  std::vector<int> hits(sol.support.size(), 0);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto m = draw_matching(sol, k);
    ++hits[std::find(sol.support.begin(), sol.support.end(), m) - sol.support.begin()];
  }
  for (std::size_t l = 0; l < hits.size(); ++l) {
    const double sigma = std::sqrt(sol.weights[l] * (1 - sol.weights[l]) / n);
    EXPECT_NEAR(static_cast<double>(hits[l]) / n, sol.weights[l], 5 * sigma + 1e-12);
  }
}

TEST(RunPirmes, TimeLimitAndRoundCapAreReported) {
  PirmesConfig config;
  config.max_rounds = 1;
  config.batch_size = 1;
  const auto sol = run_pirmes(example1(), example1_p(), {example1_da_matchings()[0]}, config);
  // M1 alone cannot cover p and one round is not enough to drop the artificial.
  EXPECT_EQ(sol.status, CgStatus::kArtificialActive);
  EXPECT_LE(sol.rounds, 1);
  config.max_rounds = 50;
  const auto more = run_pirmes(example1(), example1_p(), {example1_da_matchings()[0]}, config);
  EXPECT_EQ(more.status, CgStatus::kOptimal);
}
