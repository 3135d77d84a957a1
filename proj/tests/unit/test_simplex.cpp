#include <gtest/gtest.h>

#include "mcause/simplex.hpp"
#include "oracles.hpp"

using namespace mcause;

TEST(Simplex, SmallTextbookProblem) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), value 36.
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {-3.0, -5.0};
  lp.upper_bounds = {{{1, 0}, 4}, {{0, 2}, 12}, {{3, 2}, 18}};
  auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -36.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-12);
  EXPECT_NEAR(sol.x[1], 6.0, 1e-12);
}

TEST(Simplex, EqualitiesWithRedundantRow) {
  // x + y = 1, 2x + 2y = 2 (redundant), minimize x - y.
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {1.0, -1.0};
  lp.equalities = {{{1, 1}, 1}, {{2, 2}, 2}};
  auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -1.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  LinearProgram inf;
  inf.n_vars = 1;
  inf.objective = {1.0};
  inf.equalities = {{{1.0}, 2.0}};
  inf.upper_bounds = {{{1.0}, 1.0}};
  EXPECT_EQ(solve_lp(inf).status, LpStatus::kInfeasible);

  LinearProgram unb;
  unb.n_vars = 2;
  unb.objective = {-1.0, 0.0};
  unb.upper_bounds = {{{-1.0, 1.0}, 1.0}};
  EXPECT_EQ(solve_lp(unb).status, LpStatus::kUnbounded);
}

TEST(Simplex, NegativeRhsHandled) {
  // x >= 2 written as -x <= -2; minimize x.
  LinearProgram lp;
  lp.n_vars = 1;
  lp.objective = {1.0};
  lp.upper_bounds = {{{-1.0}, -2.0}};
  auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-12);
}

TEST(Simplex, DegenerateTransportationMatchesVertexEnumeration) {
  // Margins with ties make many bases degenerate; Bland's rule must still
  // terminate at the optimum.
  std::vector<double> r{0.25, 0.25, 0.5}, c{0.5, 0.25, 0.25};
  auto verts = oracle::transportation_vertices(r, c);
  ASSERT_FALSE(verts.empty());
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> cost(9);
    for (auto& v : cost) v = std::floor(rng.uniform() * 4) - 2;  // many ties
    LinearProgram lp;
    lp.n_vars = 9;
    lp.objective = cost;
    for (int i = 0; i < 3; ++i) {
      LinearProgram::Row row{std::vector<double>(9, 0.0), r[i]};
      for (int j = 0; j < 3; ++j) row.coeffs[i * 3 + j] = 1.0;
      lp.equalities.push_back(row);
    }
    for (int j = 0; j < 3; ++j) {
      LinearProgram::Row col{std::vector<double>(9, 0.0), c[j]};
      for (int i = 0; i < 3; ++i) col.coeffs[i * 3 + j] = 1.0;
      lp.equalities.push_back(col);
    }
    auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::kOptimal);
    double best = INFINITY;
    for (const auto& v : verts) {
      double val = 0.0;
      for (int i = 0; i < 9; ++i) val += cost[i] * v[i];
      best = std::min(best, val);
    }
    EXPECT_NEAR(sol.objective, best, 1e-12);
  }
}
