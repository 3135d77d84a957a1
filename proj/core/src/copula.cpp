#include "mcause/copula.hpp"

#include <cmath>
#include <sstream>

#include "mcause/error.hpp"

namespace mcause {
namespace {

std::vector<std::string> names_of(std::span<const VarSpec> vars) {
  std::vector<std::string> out;
  for (const auto& v : vars) out.push_back(v.name);
  return out;
}

std::vector<std::string> concat(std::initializer_list<std::span<const std::string>> parts) {
  std::vector<std::string> out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<VarSpec> specs_of(const JointTable& t, std::span<const std::string> names) {
  std::vector<VarSpec> out;
  for (const auto& n : names) out.push_back(t.var(n));
  return out;
}

std::size_t group_index(std::span<const int> levels, std::span<const VarSpec> vars) {
  if (levels.size() != vars.size())
    throw InvalidInput("wrong number of levels for copula group");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (levels[i] < 0 || levels[i] >= vars[i].card)
      throw InvalidInput("copula level out of range for '" + vars[i].name + "'");
    flat = flat * static_cast<std::size_t>(vars[i].card) +
           static_cast<std::size_t>(levels[i]);
  }
  return flat;
}

}  // namespace

CopulaGrid CopulaGrid::independence(std::vector<VarSpec> vars_v,
                                    std::vector<VarSpec> vars_w,
                                    std::vector<VarSpec> cond_vars) {
  CopulaGrid g{std::move(vars_v), std::move(vars_w), std::move(cond_vars), {}};
  g.values.assign(cell_count(g.layout()), 1.0);
  return g;
}

std::vector<VarSpec> CopulaGrid::layout() const {
  std::vector<VarSpec> out = cond_vars;
  out.insert(out.end(), vars_v.begin(), vars_v.end());
  out.insert(out.end(), vars_w.begin(), vars_w.end());
  return out;
}

std::size_t CopulaGrid::flat_index(std::span<const int> cond,
                                   std::span<const int> v,
                                   std::span<const int> w) const {
  std::size_t nv = cell_count(vars_v);
  std::size_t nw = cell_count(vars_w);
  return (group_index(cond, cond_vars) * nv + group_index(v, vars_v)) * nw +
         group_index(w, vars_w);
}

std::size_t CopulaGrid::undefined_count() const {
  std::size_t n = 0;
  for (const auto& c : values)
    if (!c) ++n;
  return n;
}

CopulaGrid copula_density(const JointTable& table,
                          std::span<const std::string> group_v,
                          std::span<const std::string> group_w,
                          std::span<const std::string> cond_vars) {
  if (group_v.empty() || group_w.empty())
    throw InvalidInput("copula groups must be non-empty");
  // Layout order (cond, v, w) makes every marginal below index-compatible.
  JointTable cvw = marginalize(table, concat({cond_vars, group_v, group_w}));
  JointTable cv = marginalize(table, concat({cond_vars, group_v}));
  JointTable cw = marginalize(table, concat({cond_vars, group_w}));
  JointTable c = marginalize(table, concat({cond_vars}));

  CopulaGrid grid{specs_of(table, group_v), specs_of(table, group_w),
                  specs_of(table, cond_vars), {}};
  const std::size_t nc = c.size();
  const std::size_t nv = cv.size() / nc;
  const std::size_t nw = cw.size() / nc;
  grid.values.resize(cvw.size());
  for (std::size_t ic = 0; ic < nc; ++ic) {
    for (std::size_t iv = 0; iv < nv; ++iv) {
      double p_cv = cv[ic * nv + iv];
      for (std::size_t iw = 0; iw < nw; ++iw) {
        double p_cw = cw[ic * nw + iw];
        std::size_t cell = (ic * nv + iv) * nw + iw;
        if (p_cv > 0.0 && p_cw > 0.0)
          grid.values[cell] = cvw[cell] * c[ic] / (p_cv * p_cw);
        else
          grid.values[cell] = std::nullopt;
      }
    }
  }
  return grid;
}

JointTable compose_joint(const JointTable& observed, const JointTable& prior_z,
                         const CopulaGrid& factor_copula,
                         const CopulaGrid& outcome_copula) {
  const auto& z_vars = factor_copula.vars_v;
  const auto& a_vars = factor_copula.vars_w;
  const auto& y_vars = outcome_copula.vars_v;
  if (!factor_copula.cond_vars.empty())
    throw InvalidInput("factor copula must be unconditional");
  if (outcome_copula.vars_w != z_vars || outcome_copula.cond_vars != a_vars)
    throw InvalidInput(
        "outcome copula groups do not match the factor copula's (Z, A)");

  auto a_names = names_of(a_vars);
  auto y_names = names_of(y_vars);
  auto z_names = names_of(z_vars);
  JointTable obs = marginalize(observed, concat({a_names, y_names}));
  if (obs.rank() != observed.rank())
    throw InvalidInput("observed table holds variables beyond (A, Y)");
  JointTable pz = marginalize(prior_z, z_names);
  if (pz.rank() != prior_z.rank())
    throw InvalidInput("prior table holds variables beyond Z");
  for (std::size_t i = 0; i < a_vars.size(); ++i)
    if (obs.vars()[i] != a_vars[i])
      throw InvalidInput("cause cardinality mismatch between factors");
  for (std::size_t i = 0; i < y_vars.size(); ++i)
    if (obs.vars()[a_vars.size() + i] != y_vars[i])
      throw InvalidInput("outcome cardinality mismatch between factors");
  if (pz.vars() != z_vars)
    throw InvalidInput("latent cardinality mismatch between factors");

  const std::size_t na = cell_count(a_vars);
  const std::size_t ny = cell_count(y_vars);
  const std::size_t nz = cell_count(z_vars);
  if (factor_copula.values.size() != nz * na ||
      outcome_copula.values.size() != na * ny * nz)
    throw InvalidInput("copula grid has the wrong number of cells");

  std::vector<VarSpec> vars = a_vars;
  vars.insert(vars.end(), y_vars.begin(), y_vars.end());
  vars.insert(vars.end(), z_vars.begin(), z_vars.end());
  std::vector<double> probs(na * ny * nz, 0.0);
  double total = 0.0;
  for (std::size_t ia = 0; ia < na; ++ia) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      double p_ay = obs[ia * ny + iy];
      if (p_ay == 0.0) continue;
      for (std::size_t iz = 0; iz < nz; ++iz) {
        if (pz[iz] == 0.0) continue;
        const auto& cza = factor_copula.values[iz * na + ia];
        if (cza && *cza == 0.0) continue;
        const auto& cyz = outcome_copula.values[(ia * ny + iy) * nz + iz];
        if (!cza || !cyz) {
          std::ostringstream os;
          os << "copula undefined at a supported cell (a index " << ia
             << ", y index " << iy << ", z index " << iz << ")";
          throw InconsistentFactors(os.str());
        }
        double v = p_ay * pz[iz] * *cza * *cyz;
        if (!(v >= 0.0) || !std::isfinite(v))
          throw InconsistentFactors("negative or non-finite factor product");
        probs[(ia * ny + iy) * nz + iz] = v;
        total += v;
      }
    }
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "composed joint sums to " << total
       << "; the outcome copula violates the reweighted-sum constraint";
    throw InconsistentFactors(os.str());
  }
  return JointTable(std::move(vars), std::move(probs));
}

JointDecomposition decompose_joint(const JointTable& full,
                                   std::span<const std::string> causes,
                                   std::span<const std::string> outcome,
                                   std::span<const std::string> latent) {
  auto all = concat({causes, outcome, latent});
  if (marginalize(full, all).rank() != full.rank())
    throw InvalidInput("decompose_joint: table holds unassigned variables");
  return JointDecomposition{
      marginalize(full, concat({causes, outcome})),
      marginalize(full, concat({latent})),
      copula_density(full, latent, causes),
      copula_density(full, outcome, latent, causes),
  };
}

}  // namespace mcause
