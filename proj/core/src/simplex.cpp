#include "mcause/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcause/error.hpp"

namespace mcause {
namespace {

// Pivoting runs in quad precision. Margins in the sensitivity programs span
// many orders of magnitude and double rounding in the tableau was enough to
// flip optimal bases.
using Real = __float128;

Real abs_real(Real v) { return v < 0 ? -v : v; }

// Ratio-test ties, near the resolution of the quad tableau.
const Real kTie = 1e-30;

// Tableau over columns [structural | slack | artificial | rhs].
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, Real(0)) {}
  Real& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const Real inv = Real(1) / (*this)(pr, pc);
    for (std::size_t c = 0; c < cols_; ++c) (*this)(pr, c) *= inv;
    (*this)(pr, pc) = 1;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const Real f = (*this)(r, pc);
      if (f == 0) continue;
      for (std::size_t c = 0; c < cols_; ++c) (*this)(r, c) -= f * (*this)(pr, c);
      (*this)(r, pc) = 0;
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<Real> a_;
};

struct Solver {
  Tableau t;
  std::vector<std::size_t> basis;
  std::size_t n_cols;  // structural + slack + artificial
  std::size_t rhs;
  Real tol;
  Real pivot_tol;
  int iterations = 0;
  int max_iterations;

  // Reduced costs of `cost` for the current basis, in the last tableau row.
  void price(const std::vector<Real>& cost) {
    std::size_t obj = t.rows() - 1;
    for (std::size_t c = 0; c <= rhs; ++c) t(obj, c) = c < n_cols ? cost[c] : Real(0);
    for (std::size_t r = 0; r < basis.size(); ++r) {
      Real cb = cost[basis[r]];
      if (cb == 0) continue;
      for (std::size_t c = 0; c <= rhs; ++c) t(obj, c) -= cb * t(r, c);
    }
  }

  // Runs Bland's rule over columns < allowed. Returns the status.
  LpStatus iterate(std::size_t allowed) {
    const std::size_t obj = t.rows() - 1;
    for (;;) {
      if (iterations >= max_iterations) return LpStatus::kIterationLimit;
      std::size_t enter = allowed;
      for (std::size_t c = 0; c < allowed; ++c)
        if (t(obj, c) < -tol) {
          enter = c;
          break;
        }
      if (enter == allowed) return LpStatus::kOptimal;
      std::size_t leave = basis.size();
      Real best = 0;
      for (std::size_t r = 0; r < basis.size(); ++r) {
        Real coef = t(r, enter);
        if (coef <= pivot_tol) continue;
        Real ratio = t(r, rhs) / coef;
        if (leave == basis.size() || ratio < best - kTie ||
            (abs_real(ratio - best) <= kTie && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == basis.size()) return LpStatus::kUnbounded;
      t.pivot(leave, enter);
      basis[leave] = enter;
      ++iterations;
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const std::size_t n = lp.n_vars;
  if (lp.objective.size() != n) throw InvalidInput("objective length differs from n_vars");
  for (const auto* rows : {&lp.equalities, &lp.upper_bounds})
    for (const auto& r : *rows)
      if (r.coeffs.size() != n) throw InvalidInput("constraint length differs from n_vars");

  const std::size_t m_eq = lp.equalities.size();
  const std::size_t m_ub = lp.upper_bounds.size();
  const std::size_t m = m_eq + m_ub;
  const std::size_t n_slack = m_ub;
  const std::size_t n_art = m;
  const std::size_t n_cols = n + n_slack + n_art;
  Solver s{Tableau(m + 1, n_cols + 1), std::vector<std::size_t>(m), n_cols, n_cols,
           Real(options.tolerance), Real(options.pivot_tolerance), 0, options.max_iterations};

  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = r < m_eq ? lp.equalities[r] : lp.upper_bounds[r - m_eq];
    Real sign = row.rhs < 0.0 ? -1 : 1;
    for (std::size_t c = 0; c < n; ++c) s.t(r, c) = sign * row.coeffs[c];
    if (r >= m_eq) s.t(r, n + (r - m_eq)) = sign;
    s.t(r, s.rhs) = sign * row.rhs;
    s.t(r, n + n_slack + r) = 1.0;
    s.basis[r] = n + n_slack + r;
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<Real> phase1(n_cols, Real(0));
  for (std::size_t c = n + n_slack; c < n_cols; ++c) phase1[c] = 1.0;
  s.price(phase1);
  LpSolution out;
  LpStatus st = s.iterate(n_cols);
  out.iterations = s.iterations;
  if (st == LpStatus::kIterationLimit) {
    out.status = st;
    return out;
  }
  Real infeas = 0;
  for (std::size_t r = 0; r < m; ++r)
    if (s.basis[r] >= n + n_slack) infeas += s.t(r, s.rhs);
  Real scale = 1;
  for (std::size_t r = 0; r < m; ++r) scale = std::max(scale, abs_real(s.t(r, s.rhs)));
  if (infeas > 1e-9 * scale) {
    out.status = LpStatus::kInfeasible;
    return out;
  }

  // Drive zero-level artificials out of the basis; rows where that is
  // impossible are redundant and are dropped.
  std::vector<bool> keep(m, true);
  for (std::size_t r = 0; r < m; ++r) {
    if (s.basis[r] < n + n_slack) continue;
    bool moved = false;
    for (std::size_t c = 0; c < n + n_slack; ++c) {
      if (abs_real(s.t(r, c)) > Real(options.pivot_tolerance)) {
        s.t.pivot(r, c);
        s.basis[r] = c;
        moved = true;
        break;
      }
    }
    if (!moved) keep[r] = false;
  }
  if (std::find(keep.begin(), keep.end(), false) != keep.end()) {
    std::size_t kept = 0;
    for (bool k : keep) kept += k ? 1 : 0;
    Tableau t2(kept + 1, n_cols + 1);
    std::vector<std::size_t> b2;
    std::size_t r2 = 0;
    for (std::size_t r = 0; r < m; ++r) {
      if (!keep[r]) continue;
      for (std::size_t c = 0; c <= n_cols; ++c) t2(r2, c) = s.t(r, c);
      b2.push_back(s.basis[r]);
      ++r2;
    }
    s.t = std::move(t2);
    s.basis = std::move(b2);
  }

  // Phase 2 over structural and slack columns only.
  std::vector<Real> phase2(n_cols, Real(0));
  for (std::size_t c = 0; c < n; ++c) phase2[c] = lp.objective[c];
  s.price(phase2);
  st = s.iterate(n + n_slack);
  out.iterations = s.iterations;
  out.status = st;
  if (st != LpStatus::kOptimal) return out;
  out.x.assign(n, 0.0);
  for (std::size_t r = 0; r < s.basis.size(); ++r)
    if (s.basis[r] < n) out.x[s.basis[r]] = std::max(0.0, static_cast<double>(s.t(r, s.rhs)));
  out.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) out.objective += lp.objective[c] * out.x[c];
  return out;
}

}  // namespace mcause
