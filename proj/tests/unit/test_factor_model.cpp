#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mcause/error.hpp"
#include "mcause/factor_model.hpp"
#include "mcause/scm.hpp"
#include "oracles.hpp"

using namespace mcause;

namespace {

LatentClassModel two_class_model() {
  LatentClassModel m;
  m.n_classes = 2;
  m.pi = {0.4, 0.6};
  m.columns = {{"A1", 2}, {"A2", 2}, {"A3", 3}};
  m.n_causes = 3;
  m.theta = {{{0.9, 0.1}, {0.2, 0.8}},
             {{0.8, 0.2}, {0.3, 0.7}},
             {{0.6, 0.3, 0.1}, {0.1, 0.2, 0.7}}};
  return m;
}

Dataset cause_data(const ScmSpec& scm, std::size_t n, std::uint64_t seed) {
  auto s = sample(scm, n, seed);
  auto names = scm.cause_names();
  return s.observed.select(names);
}

void expect_monotone(const FitReport& r) {
  for (const auto& trace : r.restart_traces)
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i] - trace[i - 1], -1e-8);
}

}  // namespace

TEST(EmFit, SingleClassMatchesEmpiricalMarginals) {
  auto data = cause_data(random_scm({.z_card = 2, .n_causes = 3, .cause_card = 3}, 1), 2000, 5);
  auto fit = em_fit(data, {.n_classes = 1, .restarts = 2});
  double closed = 0.0;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    std::vector<double> freq(static_cast<std::size_t>(data.columns()[j].card), 0.0);
    for (std::size_t r = 0; r < data.rows(); ++r) freq[data(r, j)] += 1.0;
    for (std::size_t l = 0; l < freq.size(); ++l) {
      double p = freq[l] / data.rows();
      EXPECT_NEAR(fit.model.theta[j][0][l], p, 1e-12);
      if (freq[l] > 0) closed += freq[l] * std::log(p);
    }
  }
  EXPECT_NEAR(fit.report.final_loglik, closed, 1e-8 * std::abs(closed));
  EXPECT_NEAR(log_likelihood(fit.model, data), closed, 1e-8 * std::abs(closed));
  EXPECT_TRUE(fit.report.converged);
}

TEST(EmFit, LoglikTraceIsMonotone) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto data = cause_data(random_scm({.z_card = 3, .n_causes = 4}, seed), 1500, seed);
    auto fit = em_fit(data, {.n_classes = 3, .restarts = 3, .seed = seed});
    expect_monotone(fit.report);
    EXPECT_EQ(fit.report.restart_traces.size(), 3u);
    EXPECT_NEAR(fit.report.final_loglik, log_likelihood(fit.model, data), 1e-8);
  }
}

TEST(EmFit, BeatsTrueParametersOnTheirOwnData) {
  auto truth = two_class_model();
  auto data = sample_from_model(truth, 10000, 3);
  auto fit = em_fit(data, {.n_classes = 2, .restarts = 5, .seed = 1});
  EXPECT_GE(fit.report.final_loglik, log_likelihood(truth, data) - 1e-9);
  expect_monotone(fit.report);
}

TEST(EmFit, NonConvergenceFlaggedAtOneIteration) {
  auto data = sample_from_model(two_class_model(), 500, 4);
  auto fit = em_fit(data, {.n_classes = 2, .restarts = 1, .max_iter = 1});
  EXPECT_FALSE(fit.report.converged);
  EXPECT_EQ(fit.report.loglik_trace.size(), 1u);
}

TEST(EmFit, BestRestartIsTheHighestLoglik) {
  auto data = sample_from_model(two_class_model(), 800, 5);
  auto fit = em_fit(data, {.n_classes = 3, .restarts = 6, .seed = 11});
  double best = -INFINITY;
  int idx = -1;
  for (std::size_t r = 0; r < fit.report.restart_traces.size(); ++r)
    if (fit.report.restart_traces[r].back() > best) {
      best = fit.report.restart_traces[r].back();
      idx = static_cast<int>(r);
    }
  EXPECT_EQ(fit.report.best_restart_index, idx);
  EXPECT_EQ(fit.report.final_loglik, best);
}

TEST(EmFit, Deterministic) {
  auto data = sample_from_model(two_class_model(), 400, 6);
  auto a = em_fit(data, {.n_classes = 2, .restarts = 3, .seed = 9});
  auto b = em_fit(data, {.n_classes = 2, .restarts = 3, .seed = 9});
  EXPECT_EQ(a.report.loglik_trace, b.report.loglik_trace);
  EXPECT_EQ(a.model.theta, b.model.theta);
}

TEST(EmFit, RejectsBadOptions) {
  auto data = sample_from_model(two_class_model(), 10, 6);
  EXPECT_THROW(em_fit(data, {.n_classes = 0}), InvalidInput);
  EXPECT_THROW(em_fit(Dataset({{"A", 2}}, {}), {}), InvalidInput);
}

TEST(PosteriorZ, SingleClassIsPointMass) {
  auto m = two_class_model();
  m.n_classes = 1;
  m.pi = {1.0};
  for (auto& t : m.theta) t.resize(1);
  auto post = posterior_z(m, std::vector<int>{1, 0, 2});
  ASSERT_EQ(post.size(), 1u);
  EXPECT_DOUBLE_EQ(post[0], 1.0);
  EXPECT_EQ(zhat(m, std::vector<int>{1, 1, 1}), 0);
}

TEST(PosteriorZ, SymmetricModelTiesToLowestClass) {
  LatentClassModel m;
  m.n_classes = 2;
  m.pi = {0.5, 0.5};
  m.columns = {{"A1", 2}, {"A2", 2}};
  m.n_causes = 2;
  m.theta = {{{0.8, 0.2}, {0.2, 0.8}}, {{0.2, 0.8}, {0.8, 0.2}}};
  auto post = posterior_z(m, std::vector<int>{0, 0});
  EXPECT_DOUBLE_EQ(post[0], 0.5);
  EXPECT_DOUBLE_EQ(post[1], 0.5);
  EXPECT_EQ(zhat(m, std::vector<int>{0, 0}), 0);
}

TEST(PosteriorZ, MatchesDirectBayes) {
  auto m = two_class_model();
  for (const auto& row : all_assignments(m.columns)) {
    std::vector<double> joint(2);
    for (int z = 0; z < 2; ++z) {
      joint[z] = m.pi[z];
      for (std::size_t j = 0; j < 3; ++j) joint[z] *= m.theta[j][z][row[j]];
    }
    double s = joint[0] + joint[1];
    auto post = posterior_z(m, row);
    EXPECT_NEAR(post[0], joint[0] / s, 1e-14);
    EXPECT_NEAR(post[1], joint[1] / s, 1e-14);
    EXPECT_NEAR(post[0] + post[1], 1.0, kNormTolerance);
  }
}

TEST(PosteriorZ, ZeroLikelihoodRowThrows) {
  auto m = two_class_model();
  m.theta[0] = {{1.0, 0.0}, {1.0, 0.0}};
  EXPECT_THROW(posterior_z(m, std::vector<int>{1, 0, 0}), ZeroLikelihoodRow);
  EXPECT_THROW(zhat(m, std::vector<int>{1, 0, 0}), ZeroLikelihoodRow);
}

TEST(Zhat, SeparableModelRecoversGeneratingClass) {
  // Disjoint supports: class 0 only emits levels {0, 1}, class 1 only {2, 3}.
  ScmSpec scm = random_scm({.z_card = 2, .n_causes = 3, .cause_card = 4}, 3);
  for (auto& t : scm.p_a_given_z) t.values = {0.6, 0.4, 0, 0, 0, 0, 0.3, 0.7};
  auto s = sample(scm, 500, 8);
  auto causes = s.observed.select(scm.cause_names());
  auto fit = em_fit(causes, {.n_classes = 2, .restarts = 5, .seed = 2});
  auto zh = zhat_column(fit.model, causes);
  // Labels may be swapped; agreement must be all-or-nothing.
  std::size_t same = 0;
  for (std::size_t i = 0; i < zh.size(); ++i) same += zh[i] == s.hidden_z[i];
  EXPECT_TRUE(same == zh.size() || same == 0u) << same;
}

TEST(LatentClassModel, LabelPermutationInvariance) {
  auto m = two_class_model();
  auto data = sample_from_model(m, 300, 12);
  auto swapped = m;
  std::swap(swapped.pi[0], swapped.pi[1]);
  for (auto& t : swapped.theta) std::swap(t[0], t[1]);
  EXPECT_NEAR(log_likelihood(m, data), log_likelihood(swapped, data), 1e-9);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto p = posterior_z(m, data.row(r));
    if (std::abs(p[0] - p[1]) < 1e-12) continue;
    EXPECT_EQ(zhat(m, data.row(r)), 1 - zhat(swapped, data.row(r)));
  }
}

TEST(LatentClassModel, PopulationFitMakesCausesIndependent) {
  // Fit on a large exact-frequency dataset from a 2-class SCM with L = 2: the
  // implied joint P(z) prod_k P(a_k | z) has mutually independent causes
  // given Z by construction; check the fitted model reproduces the population
  // cause table closely.
  auto scm = random_scm({.z_card = 2, .n_causes = 3}, 21);
  auto pop = marginalize(structural_joint(scm), {"A1", "A2", "A3"});
  std::vector<int> values;
  const int scale = 20000;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    int count = static_cast<int>(std::lround(pop[i] * scale));
    auto lv = pop.levels_at(i);
    for (int c = 0; c < count; ++c) values.insert(values.end(), lv.begin(), lv.end());
  }
  Dataset data(pop.vars(), values);
  auto fit = em_fit(data, {.n_classes = 2, .restarts = 10, .seed = 4});
  std::vector<VarSpec> vars{{"Z", 2}, {"A1", 2}, {"A2", 2}, {"A3", 2}};
  std::vector<double> implied;
  for (const auto& lv : all_assignments(vars)) {
    double p = fit.model.pi[lv[0]];
    for (int k = 0; k < 3; ++k) p *= fit.model.theta[k][lv[0]][lv[k + 1]];
    implied.push_back(p);
  }
  JointTable t(vars, implied);
  std::vector<std::string> group{"A1", "A2", "A3"}, cond{"Z"};
  EXPECT_LE(mutual_independence_gap(t, group, cond), 1e-12);
  auto emp = empirical_table(data, group);
  EXPECT_LE(max_abs_diff(marginalize(t, group), emp), 5e-3);
}

TEST(PredictiveCheck, ConstantStatisticGivesOne) {
  auto m = two_class_model();
  auto data = sample_from_model(m, 100, 1);
  EXPECT_DOUBLE_EQ(predictive_check(m, data, [](const Dataset&) { return 3.0; }, 20, 2), 1.0);
}

TEST(PredictiveCheck, SelfConsistentDataIsNotRejected) {
  auto m = two_class_model();
  int extreme = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    auto data = sample_from_model(m, 400, 1000 + t);
    double p = predictive_check(
        m, data, [](const Dataset& d) { return mean_pairwise_correlation(d, 3); }, 99, t);
    if (p <= 0.01 || p >= 0.99) ++extreme;
  }
  // About 2% of trials expected in the tails; allow generous slack.
  EXPECT_LE(extreme, 6);
}

TEST(PredictiveCheck, ResidualDependenceDetectedBySingleClassFit) {
  auto scm = random_scm({.z_card = 2, .n_causes = 3}, 1);
  for (auto& t : scm.p_a_given_z) t.values = {0.9, 0.1, 0.1, 0.9};
  auto data = cause_data(scm, 2000, 3);
  auto fit = em_fit(data, {.n_classes = 1, .restarts = 1});
  double p = predictive_check(
      fit.model, data, [](const Dataset& d) { return mean_pairwise_correlation(d, 3); }, 99, 5);
  EXPECT_LT(p, 0.01);
}

TEST(BicTable, ReportsEachClassCount) {
  auto data = sample_from_model(two_class_model(), 1000, 7);
  std::vector<int> ls{1, 2, 3};
  auto rows = bic_table(data, ls, {.restarts = 3, .seed = 1});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].n_params, 4u);  // 1 class: 1 + 1 + 2
  EXPECT_EQ(rows[1].n_params, 9u);
  for (const auto& r : rows)
    EXPECT_NEAR(r.bic, -2 * r.loglik + r.n_params * std::log(1000.0), 1e-9);
  EXPECT_LT(rows[1].bic, rows[0].bic);
}
