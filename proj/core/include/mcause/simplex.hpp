#pragma once

#include <cstddef>
#include <vector>

namespace mcause {

// minimize objective . x  subject to  equalities, upper bounds, x >= 0.
struct LinearProgram {
  struct Row {
    std::vector<double> coeffs;
    double rhs = 0.0;
  };
  std::size_t n_vars = 0;
  std::vector<double> objective;
  std::vector<Row> equalities;
  std::vector<Row> upper_bounds;  // coeffs . x <= rhs
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

struct SimplexOptions {
  // Reduced costs above -tolerance count as optimal.
  double tolerance = 1e-20;
  // Smallest pivot element accepted in the ratio test; rows with a smaller
  // positive coefficient are treated as not limiting the entering variable.
  double pivot_tolerance = 1e-24;
  int max_iterations = 100000;
};

// Dense two-phase primal simplex with Bland's rule (smallest-index entering
// and leaving variables), so it terminates on degenerate problems. The
// tableau is held in quad precision; inputs and results are doubles.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace mcause
