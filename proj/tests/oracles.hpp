// Independent reference computations shared by the unit and acceptance tests.
// Everything here is written by direct enumeration over levels, without going
// through the library's table algebra.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcause/joint_table.hpp"
#include "mcause/random.hpp"
#include "mcause/scm.hpp"

namespace oracle {

using mcause::JointTable;
using mcause::Levels;
using mcause::ScmSpec;
using mcause::VarSpec;

// Random table with Dirichlet(1) cells; `positive` floors every cell away from 0.
inline JointTable random_table(std::vector<VarSpec> vars, std::uint64_t seed,
                               bool positive = true) {
  mcause::Rng rng(seed);
  std::size_t n = mcause::cell_count(vars);
  auto p = mcause::dirichlet(rng, n, 1.0);
  if (positive) {
    double s = 0.0;
    for (auto& v : p) s += (v += 1e-3);
    for (auto& v : p) v /= s;
  }
  return JointTable(std::move(vars), std::move(p));
}

// Decodes a flat row-major index into levels.
inline Levels decode(std::size_t flat, const std::vector<VarSpec>& vars) {
  Levels lv(vars.size());
  for (std::size_t i = vars.size(); i-- > 0;) {
    lv[i] = static_cast<int>(flat % static_cast<std::size_t>(vars[i].card));
    flat /= static_cast<std::size_t>(vars[i].card);
  }
  return lv;
}

inline std::size_t encode(const Levels& lv, const std::vector<VarSpec>& vars) {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars.size(); ++i)
    flat = flat * static_cast<std::size_t>(vars[i].card) + static_cast<std::size_t>(lv[i]);
  return flat;
}

// Structural joint density P(a, x, y, z) evaluated straight from the tables.
inline double structural_cell(const ScmSpec& scm, const Levels& a, int x, int y, int z) {
  double p = scm.p_z[static_cast<std::size_t>(z)];
  for (std::size_t k = 0; k < a.size(); ++k)
    p *= scm.p_a_given_z[k].values[static_cast<std::size_t>(z * scm.causes[k].card + a[k])];
  if (scm.x) p *= scm.p_x_given_z->values[static_cast<std::size_t>(z * scm.x->card + x)];
  Levels parents = a;
  parents.push_back(z);
  std::vector<VarSpec> pv = scm.causes;
  pv.push_back(scm.z);
  std::size_t row = encode(parents, pv);
  p *= scm.p_y_given_az.values[row * static_cast<std::size_t>(scm.y.card) + static_cast<std::size_t>(y)];
  return p;
}

// sum_z P(z) P(y | a, z) obtained by enumerating the full joint: first the
// joint cells P(a, z) and P(a, y, z), then the adjustment sum.
inline std::vector<double> adjustment_by_enumeration(const ScmSpec& scm, const Levels& a) {
  const int nx = scm.x ? scm.x->card : 1;
  std::vector<double> pz(static_cast<std::size_t>(scm.z.card), 0.0);
  std::vector<double> paz(pz.size(), 0.0);
  std::vector<std::vector<double>> payz(pz.size(), std::vector<double>(static_cast<std::size_t>(scm.y.card), 0.0));
  auto all = mcause::all_assignments(scm.causes);
  for (const auto& b : all)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < scm.y.card; ++y)
        for (int z = 0; z < scm.z.card; ++z) {
          double c = structural_cell(scm, b, x, y, z);
          pz[z] += c;
          if (b == a) {
            paz[z] += c;
            payz[z][y] += c;
          }
        }
  std::vector<double> out(static_cast<std::size_t>(scm.y.card), 0.0);
  for (int z = 0; z < scm.z.card; ++z) {
    if (pz[z] <= 0.0) continue;
    for (int y = 0; y < scm.y.card; ++y) out[y] += pz[z] * payz[z][y] / paz[z];
  }
  return out;
}

inline double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Vertices of the transportation polytope {q >= 0 : row sums r, column sums c}
// by exhaustive basis enumeration: choose |r| + |c| - 1 cells, solve the
// margin equations on them, keep nonnegative solutions. Feasible only for
// small grids (|r| * |c| <= 16).
inline std::vector<std::vector<double>> transportation_vertices(const std::vector<double>& r,
                                                                const std::vector<double>& c) {
  const std::size_t nr = r.size(), nc = c.size(), n = nr * nc;
  const std::size_t k = nr + nc - 1;
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  if (k > n) return out;
  while (true) {
    // Equations: rows then columns, unknowns = picked cells.
    const std::size_t ne = nr + nc;
    std::vector<std::vector<double>> m(ne, std::vector<double>(k + 1, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
      m[pick[j] / nc][j] = 1.0;
      m[nr + pick[j] % nc][j] = 1.0;
    }
    for (std::size_t i = 0; i < nr; ++i) m[i][k] = r[i];
    for (std::size_t i = 0; i < nc; ++i) m[nr + i][k] = c[i];
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_col;
    for (std::size_t col = 0; col < k && rank < ne; ++col) {
      std::size_t best = rank;
      for (std::size_t i = rank; i < ne; ++i)
        if (std::abs(m[i][col]) > std::abs(m[best][col])) best = i;
      if (std::abs(m[best][col]) < 1e-12) continue;
      std::swap(m[rank], m[best]);
      for (std::size_t i = 0; i < ne; ++i) {
        if (i == rank || m[i][col] == 0.0) continue;
        double f = m[i][col] / m[rank][col];
        for (std::size_t j = col; j <= k; ++j) m[i][j] -= f * m[rank][j];
      }
      pivot_col.push_back(col);
      ++rank;
    }
    bool consistent = rank == k;
    for (std::size_t i = rank; i < ne && consistent; ++i)
      if (std::abs(m[i][k]) > 1e-12) consistent = false;
    if (consistent) {
      std::vector<double> q(n, 0.0);
      bool nonneg = true;
      for (std::size_t i = 0; i < rank; ++i) {
        double v = m[i][k] / m[i][pivot_col[i]];
        if (v < -1e-12) nonneg = false;
        q[pick[pivot_col[i]]] = std::max(v, 0.0);
      }
      if (nonneg) out.push_back(std::move(q));
    }
    // Next k-subset of {0..n-1}.
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

// Vertex-enumeration bounds on the supported columns plus the worst-case
// extension on unsupported ones.
inline std::pair<double, double> bounds_by_vertex_enumeration(const std::vector<double>& my,
                                                              const std::vector<double>& mz,
                                                              const std::vector<double>& prior,
                                                              const std::vector<double>& g) {
  std::vector<std::size_t> sup;
  std::vector<double> mzs;
  double outside = 0.0;
  for (std::size_t z = 0; z < mz.size(); ++z) {
    if (mz[z] > 0) {
      sup.push_back(z);
      mzs.push_back(mz[z]);
    } else {
      outside += prior[z];
    }
  }
  auto verts = transportation_vertices(my, mzs);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& q : verts) {
    double v = 0.0;
    for (std::size_t y = 0; y < my.size(); ++y)
      for (std::size_t s = 0; s < sup.size(); ++s)
        v += g[y] * prior[sup[s]] * q[y * sup.size() + s] / mzs[s];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double gmin = *std::min_element(g.begin(), g.end());
  double gmax = *std::max_element(g.begin(), g.end());
  return {lo + outside * gmin, hi + outside * gmax};
}

// Population gaps for a substitute confounder s = zhat(a, x), by enumeration of
// the cells (a, x, z):
//   cause_gap = max |P(a | s) - prod_k P(a_k | s)|,
//   po_gap    = max |P(Y(a) = y | A = a', s) - P(Y(a) = y | s)|.
struct SubstituteGaps {
  double cause_gap = 0.0;
  double po_gap = 0.0;
};

template <typename ZhatFn>
SubstituteGaps substitute_gaps(const ScmSpec& scm, const ZhatFn& zhat_fn) {
  const auto all = mcause::all_assignments(scm.causes);
  const int nx = scm.x ? scm.x->card : 1;
  const std::size_t m = scm.causes.size();
  // P(a, x, z) without the outcome factor.
  auto weight = [&](const Levels& a, int x, int z) {
    double p = scm.p_z[static_cast<std::size_t>(z)];
    for (std::size_t k = 0; k < m; ++k)
      p *= scm.p_a_given_z[k].values[static_cast<std::size_t>(z * scm.causes[k].card + a[k])];
    if (scm.x) p *= scm.p_x_given_z->values[static_cast<std::size_t>(z * scm.x->card + x)];
    return p;
  };
  auto outcome = [&](const Levels& a, int z, int y) {
    Levels parents = a;
    parents.push_back(z);
    std::vector<VarSpec> pv = scm.causes;
    pv.push_back(scm.z);
    return scm.p_y_given_az.values[encode(parents, pv) * static_cast<std::size_t>(scm.y.card) +
                                   static_cast<std::size_t>(y)];
  };
  std::map<int, double> ps;
  std::map<std::pair<int, std::size_t>, double> pas;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (int x = 0; x < nx; ++x)
      for (int z = 0; z < scm.z.card; ++z) {
        double w = weight(all[i], x, z);
        int s = zhat_fn(all[i], x);
        ps[s] += w;
        pas[{s, i}] += w;
      }
  SubstituteGaps g;
  for (const auto& [s, p] : ps) {
    if (p <= 0.0) continue;
    std::vector<std::vector<double>> marg(m);
    for (std::size_t k = 0; k < m; ++k) marg[k].assign(static_cast<std::size_t>(scm.causes[k].card), 0.0);
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t k = 0; k < m; ++k) marg[k][static_cast<std::size_t>(all[i][k])] += pas[{s, i}] / p;
    for (std::size_t i = 0; i < all.size(); ++i) {
      double prod = 1.0;
      for (std::size_t k = 0; k < m; ++k) prod *= marg[k][static_cast<std::size_t>(all[i][k])];
      g.cause_gap = std::max(g.cause_gap, std::abs(pas[{s, i}] / p - prod));
    }
  }
  for (const auto& target : all)
    for (int y = 0; y < scm.y.card; ++y) {
      std::map<int, double> num_s;
      std::map<std::pair<int, std::size_t>, double> num_as;
      for (std::size_t i = 0; i < all.size(); ++i)
        for (int x = 0; x < nx; ++x)
          for (int z = 0; z < scm.z.card; ++z) {
            double w = weight(all[i], x, z) * outcome(target, z, y);
            int s = zhat_fn(all[i], x);
            num_s[s] += w;
            num_as[{s, i}] += w;
          }
      for (const auto& [key, num] : num_as) {
        double pa = pas[key];
        if (pa <= 0.0) continue;
        g.po_gap = std::max(g.po_gap, std::abs(num / pa - num_s[key.first] / ps[key.first]));
      }
    }
  return g;
}

}  // namespace oracle
