#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mcause/error.hpp"
#include "mcause/sensitivity.hpp"
#include "oracles.hpp"

using namespace mcause;

namespace {

std::vector<double> dist(Rng& rng, std::size_t n) { return dirichlet(rng, n, 1.0); }

void expect_region_valid(const IgnoranceRegion& reg, const std::vector<double>& my,
                         const std::vector<double>& mz, const std::vector<double>& prior,
                         const LinearEstimand& est) {
  const std::size_t ny = my.size(), nz = mz.size();
  EXPECT_LE(reg.lower, reg.upper);
  for (const auto* q : {&reg.attained_q_lower, &reg.attained_q_upper}) {
    ASSERT_EQ(q->size(), ny * nz);
    for (std::size_t y = 0; y < ny; ++y) {
      double s = 0.0;
      for (std::size_t z = 0; z < nz; ++z) s += (*q)[y * nz + z];
      EXPECT_NEAR(s, my[y], 1e-9);
    }
    for (std::size_t z = 0; z < nz; ++z) {
      double s = 0.0;
      for (std::size_t y = 0; y < ny; ++y) s += (*q)[y * nz + z];
      EXPECT_NEAR(s, mz[z], 1e-9);
    }
    for (double v : *q) EXPECT_GE(v, -1e-12);
  }
  EXPECT_NEAR(estimand_value(reg.outcome_model_lower, prior, est), reg.lower, 1e-9);
  EXPECT_NEAR(estimand_value(reg.outcome_model_upper, prior, est), reg.upper, 1e-9);
}

}  // namespace

TEST(CopulaBounds, DegenerateLatentMarginCollapses) {
  std::vector<double> my{0.3, 0.7}, mz{1.0, 0.0}, prior{1.0, 0.0};
  auto est = LinearEstimand::probability_of(2, 1);
  auto reg = copula_bounds(my, mz, prior, est);
  EXPECT_NEAR(reg.lower, 0.7, 1e-12);
  EXPECT_NEAR(reg.upper, 0.7, 1e-12);
}

TEST(CopulaBounds, TwoByTwoMatchesVertexEnumeration) {
  std::vector<double> my{0.5, 0.5}, mz{0.5, 0.5}, prior{0.5, 0.5};
  auto est = LinearEstimand::probability_of(2, 1);
  auto reg = copula_bounds(my, mz, prior, est);
  auto [lo, hi] = oracle::bounds_by_vertex_enumeration(my, mz, prior, est.weights);
  EXPECT_NEAR(reg.lower, lo, 1e-12);
  EXPECT_NEAR(reg.upper, hi, 1e-12);
  // Both vertices of the 2x2 polytope with equal margins give 0.5.
  EXPECT_NEAR(reg.lower, 0.5, 1e-12);
  expect_region_valid(reg, my, mz, prior, est);
}

TEST(CopulaBounds, RandomInstancesMatchVertexEnumeration) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::size_t ny = 2 + rng.below(3), nz = 2 + rng.below(3);
    if (ny * nz > 16) nz = 16 / ny;
    auto my = dist(rng, ny), mz = dist(rng, nz), prior = dist(rng, nz);
    LinearEstimand est{"custom", {}};
    for (std::size_t y = 0; y < ny; ++y) est.weights.push_back(rng.uniform() * 4 - 2);
    auto reg = copula_bounds(my, mz, prior, est);
    auto [lo, hi] = oracle::bounds_by_vertex_enumeration(my, mz, prior, est.weights);
    EXPECT_NEAR(reg.lower, lo, 1e-9);
    EXPECT_NEAR(reg.upper, hi, 1e-9);
    expect_region_valid(reg, my, mz, prior, est);
  }
}

TEST(CopulaBounds, ManskiExtensionOnUnsupportedLatentLevels) {
  std::vector<double> my{0.2, 0.5, 0.3}, mz{0.6, 0.0, 0.4}, prior{0.3, 0.5, 0.2};
  auto est = LinearEstimand::mean(3);
  auto reg = copula_bounds(my, mz, prior, est);
  auto [lo, hi] = oracle::bounds_by_vertex_enumeration(my, mz, prior, est.weights);
  EXPECT_NEAR(reg.lower, lo, 1e-9);
  EXPECT_NEAR(reg.upper, hi, 1e-9);
  EXPECT_EQ(reg.unsupported_z, (std::vector<int>{1}));
  // Unsupported column of the outcome model is a point mass at the extreme level.
  EXPECT_DOUBLE_EQ(reg.outcome_model_lower[0 * 3 + 1], 1.0);
  EXPECT_DOUBLE_EQ(reg.outcome_model_upper[2 * 3 + 1], 1.0);
  expect_region_valid(reg, my, mz, prior, est);
}

TEST(CopulaBounds, VerticesHaveSmallSupport) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    auto my = dist(rng, 3), mz = dist(rng, 3), prior = dist(rng, 3);
    auto est = LinearEstimand::mean(3);
    auto reg = copula_bounds(my, mz, prior, est);
    for (const auto* q : {&reg.attained_q_lower, &reg.attained_q_upper}) {
      int nonzero = 0;
      for (double v : *q) nonzero += v > 1e-12;
      EXPECT_LE(nonzero, 3 + 3 - 1);
    }
  }
}

TEST(CopulaBounds, InvalidMarginsThrow) {
  auto est = LinearEstimand::probability_of(2, 0);
  std::vector<double> bad{0.6, 0.6}, good{0.5, 0.5}, three{0.2, 0.3, 0.5};
  EXPECT_THROW(copula_bounds(bad, good, good, est), InfeasibleMargins);
  EXPECT_THROW(copula_bounds(good, good, three, est), InfeasibleMargins);
  EXPECT_THROW(copula_bounds(three, good, good, est), InfeasibleMargins);
}

TEST(CalibratedBounds, ZeroBudgetIsNaivePoint) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    auto my = dist(rng, 3), mz = dist(rng, 2);
    auto est = LinearEstimand::mean(3);
    auto reg = calibrated_bounds(my, mz, mz, est, 0.0);
    double naive = my[1] + 2 * my[2];
    EXPECT_NEAR(reg.lower, naive, 1e-9);
    EXPECT_NEAR(reg.upper, naive, 1e-9);
  }
}

TEST(CalibratedBounds, LargeBudgetMatchesFullRegion) {
  Rng rng(14);
  for (int t = 0; t < 30; ++t) {
    auto my = dist(rng, 2), mz = dist(rng, 3), prior = dist(rng, 3);
    auto est = LinearEstimand::probability_of(2, 1);
    auto full = copula_bounds(my, mz, prior, est);
    for (double b : {2.0, 5.0}) {
      auto reg = calibrated_bounds(my, mz, prior, est, b);
      EXPECT_NEAR(reg.lower, full.lower, 1e-12);
      EXPECT_NEAR(reg.upper, full.upper, 1e-12);
    }
    // Just below 2 the L1 constraint never binds either (max L1 is < 2).
    auto near = calibrated_bounds(my, mz, prior, est, 1.999999);
    EXPECT_NEAR(near.lower, full.lower, 1e-6);
    EXPECT_NEAR(near.upper, full.upper, 1e-6);
  }
}

TEST(CalibratedBounds, RegionsNestInBudget) {
  Rng rng(15);
  for (int t = 0; t < 40; ++t) {
    auto my = dist(rng, 3), mz = dist(rng, 3), prior = dist(rng, 3);
    auto est = LinearEstimand::mean(3);
    double prev_lo = INFINITY, prev_hi = -INFINITY;
    for (int i = 0; i <= 10; ++i) {
      double b = 0.2 * i;
      auto reg = calibrated_bounds(my, mz, prior, est, b);
      expect_region_valid(reg, my, mz, prior, est);
      EXPECT_LE(reg.lower, prev_lo + 1e-9);
      EXPECT_GE(reg.upper, prev_hi - 1e-9);
      prev_lo = reg.lower;
      prev_hi = reg.upper;
      // Attained joints respect the budget.
      double l1 = 0.0;
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t z = 0; z < 3; ++z)
          l1 += std::abs(reg.attained_q_upper[y * 3 + z] - my[y] * mz[z]);
      EXPECT_LE(l1, b + 1e-9);
    }
  }
}

// Latent levels with P(z | A = a) near 1e-13 and 1e-5. Expected bounds come
// from exact rational enumeration of the transportation polytope vertices.
TEST(CalibratedBounds, NearlyUnsupportedLevelsMatchExactBounds) {
  struct Case {
    std::vector<double> my, mz, prior, w;
    double lower, upper;
  };
  const std::vector<Case> cases{
      {{0.9993421130286345, 0.0006578869713642148, 1.414869981171785e-15},
       {0.9997455480722255, 3.5124312814124924e-13, 0.0002544519274233644},
       {0.024603341007705504, 0.9752196181039168, 0.00017704088837785232},
       {0.13164968512108488, 0.7974521528430409, 0.05727938678617295},
       0.13136831148656192, 0.7810777980233112},
      {{0.999611365701681, 0.0003763273743845124, 1.2306923934547919e-05},
       {1.2306932517485587e-05, 0.9999876930674825},
       {0.12211606574988719, 0.8778839342501128},
       {-0.8021428604239014, -0.6925995224737673, -0.9754165775568784},
       -0.8232661598309489, -0.7887327241022727},
  };
  for (const auto& c : cases) {
    LinearEstimand est{"w", c.w};
    auto full = copula_bounds(c.my, c.mz, c.prior, est);
    EXPECT_NEAR(full.lower, c.lower, 1e-12);
    EXPECT_NEAR(full.upper, c.upper, 1e-12);
    for (double b : {0.01, 0.5, 1.5}) {
      auto reg = calibrated_bounds(c.my, c.mz, c.prior, est, b);
      EXPECT_GE(reg.lower, full.lower - 1e-12) << b;
      EXPECT_LE(reg.upper, full.upper + 1e-12) << b;
    }
  }
}

TEST(CalibratedBounds, NegativeBudgetThrows) {
  std::vector<double> p{0.5, 0.5};
  EXPECT_THROW(calibrated_bounds(p, p, p, LinearEstimand::mean(2), -0.1), InvalidInput);
}

TEST(RatioBounds, ConservativeInterval) {
  IgnoranceRegion num, den;
  num.lower = 0.2;
  num.upper = 0.4;
  den.lower = 0.5;
  den.upper = 0.8;
  auto r = ratio_bounds(num, den);
  EXPECT_DOUBLE_EQ(r.lower, 0.25);
  EXPECT_DOUBLE_EQ(r.upper, 0.8);
  EXPECT_FALSE(r.sharp);
  den.lower = 0.0;
  EXPECT_THROW(ratio_bounds(num, den), InvalidInput);
}

TEST(BenchmarkBudget, ZeroWhenIndependentGivenStrata) {
  auto scm = random_scm({.z_card = 2, .n_causes = 3}, 3);
  auto full = structural_joint(scm);
  std::vector<std::string> causes = scm.cause_names(), strata{"Z"};
  EXPECT_LE(benchmark_budget(full, causes, strata), 1e-14);
}

TEST(BenchmarkBudget, CopiedCauseSingleStratum) {
  // A1 uniform, A2 = A1: L1 distance between diag(0.5, 0.5) and the uniform
  // product is 4 * 0.25 = 1.
  JointTable t({{"A1", 2}, {"A2", 2}}, {0.5, 0.0, 0.0, 0.5});
  std::vector<std::string> causes{"A1", "A2"}, none;
  EXPECT_NEAR(benchmark_budget(t, causes, none), 1.0, 1e-15);
  Dataset d({{"A1", 2}, {"A2", 2}}, {0, 0, 1, 1, 0, 0, 1, 1});
  std::vector<int> z(4, 0);
  EXPECT_NEAR(benchmark_budget(d, z), 1.0, 1e-15);
}

TEST(BenchmarkBudget, InvariantToRelabelingLevels) {
  auto t = oracle::random_table({{"S", 2}, {"A1", 3}, {"A2", 2}}, 4);
  std::vector<double> p(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto lv = t.levels_at(i);
    lv[1] = (lv[1] + 1) % 3;
    p[t.flat_index(lv)] = t[i];
  }
  JointTable relabeled(t.vars(), p);
  std::vector<std::string> causes{"A1", "A2"}, strata{"S"};
  EXPECT_NEAR(benchmark_budget(t, causes, strata), benchmark_budget(relabeled, causes, strata), 1e-14);
}

TEST(SensitivityReport, UnconfoundedScmTruthEqualsNaive) {
  auto scm = random_scm({.z_card = 2, .n_causes = 2}, 5);
  // Y ignores Z.
  auto& t = scm.p_y_given_az;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    auto lv = oracle::decode(r, t.parents);
    lv.back() = 0;
    std::size_t src = t.row_index(lv);
    for (int y = 0; y < 2; ++y) t.values[r * 2 + y] = t.values[src * 2 + y];
  }
  std::vector<double> budgets{std::numeric_limits<double>::infinity()};
  auto rep = sensitivity_report(scm, Levels{1, 0}, LinearEstimand::probability_of(2, 1), budgets);
  ASSERT_TRUE(rep.truth.has_value());
  EXPECT_NEAR(*rep.truth, rep.naive, 1e-12);
  EXPECT_LE(rep.regions[0].lower, rep.naive + 1e-12);
  EXPECT_GE(rep.regions[0].upper, rep.naive - 1e-12);
}

TEST(SensitivityReport, ConfoundedPairTruthsInsideRegion) {
  auto pair = make_confounded_pair(demo_template(), Levels{1, 1, 1});
  std::vector<double> budgets{0.0, 0.5, std::numeric_limits<double>::infinity()};
  auto est = LinearEstimand::probability_of(2, 1);
  auto r1 = sensitivity_report(pair.original, pair.a_star, est, budgets);
  auto r2 = sensitivity_report(pair.independent, pair.a_star, est, budgets);
  // Observables and the factor model agree, so the regions agree.
  EXPECT_NEAR(r1.regions[2].lower, r2.regions[2].lower, 1e-12);
  EXPECT_NEAR(r1.regions[2].upper, r2.regions[2].upper, 1e-12);
  for (double truth : {*r1.truth, *r2.truth}) {
    EXPECT_GE(truth, r1.regions[2].lower - 1e-12);
    EXPECT_LE(truth, r1.regions[2].upper + 1e-12);
  }
  EXPECT_NEAR(r2.regions[0].lower, *r2.truth, 1e-12);
  EXPECT_GT(std::abs(*r1.truth - *r2.truth), 0.05);
}

TEST(SensitivityReport, FittedPosteriorSource) {
  auto scm = random_scm({.z_card = 2, .n_causes = 3}, 6);
  auto s = sample(scm, 3000, 2);
  auto causes = scm.cause_names();
  auto fit = em_fit(s.observed.select(causes), {.n_classes = 2, .restarts = 3, .seed = 1});
  std::vector<double> budgets{0.0, 1.0, std::numeric_limits<double>::infinity()};
  auto rep = sensitivity_report(s.observed, causes, "Y", fit.model, Levels{0, 1, 0},
                                LinearEstimand::mean(2), budgets);
  EXPECT_EQ(rep.source, "fitted_posterior");
  ASSERT_EQ(rep.regions.size(), 3u);
  EXPECT_NEAR(rep.regions[0].lower, rep.naive, 1e-9);
  EXPECT_LE(rep.regions[1].width(), rep.regions[2].width() + 1e-12);
  EXPECT_FALSE(rep.truth.has_value());
}
