#include "mcause/identify.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mcause/error.hpp"

namespace mcause {
namespace {

std::vector<std::string> pick(std::span<const std::string> names,
                              std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(names[i]);
  return out;
}

std::vector<std::string> join(std::vector<std::string> a,
                              std::span<const std::string> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string levels_str(std::span<const int> lv) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < lv.size(); ++i) os << (i ? "," : "") << lv[i];
  os << ')';
  return os.str();
}

}  // namespace

FocalPartition FocalPartition::from_focal(std::vector<std::size_t> focal,
                                          std::size_t n_causes) {
  FocalPartition p{std::move(focal), {}};
  for (std::size_t k = 0; k < n_causes; ++k)
    if (std::find(p.focal.begin(), p.focal.end(), k) == p.focal.end())
      p.auxiliary.push_back(k);
  p.validate(n_causes);
  return p;
}

void FocalPartition::validate(std::size_t n_causes) const {
  if (focal.empty()) throw InvalidInput("focal cause set must be non-empty");
  std::set<std::size_t> seen;
  for (auto group : {&focal, &auxiliary})
    for (std::size_t k : *group) {
      if (k >= n_causes) throw InvalidInput("cause index out of range in partition");
      if (!seen.insert(k).second)
        throw InvalidInput("focal and auxiliary causes must be disjoint");
    }
  if (seen.size() != n_causes)
    throw InvalidInput("partition must cover every cause");
}

PotentialOutcomeDist adjust(const JointTable& full,
                            std::span<const std::string> causes,
                            const std::string& outcome,
                            std::span<const std::string> confounders,
                            std::span<const int> a) {
  if (a.size() != causes.size()) throw InvalidInput("cause assignment has the wrong length");
  std::vector<std::string> zn(confounders.begin(), confounders.end());
  JointTable pz = marginalize(full, zn);
  JointTable zay = marginalize(full, join(join(zn, causes), std::vector<std::string>{outcome}));
  const auto& yv = full.var(outcome);
  const auto ny = static_cast<std::size_t>(yv.card);

  // Within each z, locate the (a, y) block.
  std::vector<VarSpec> a_vars;
  for (const auto& c : causes) a_vars.push_back(full.var(c));
  const std::size_t na = cell_count(a_vars);
  std::size_t ia = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < 0 || a[k] >= a_vars[k].card) throw InvalidInput("cause level out of range");
    ia = ia * static_cast<std::size_t>(a_vars[k].card) + static_cast<std::size_t>(a[k]);
  }

  PotentialOutcomeDist out{Levels(a.begin(), a.end()), std::vector<double>(ny, 0.0)};
  std::vector<Levels> bad;
  for (std::size_t iz = 0; iz < pz.size(); ++iz) {
    if (pz[iz] <= 0.0) continue;
    const std::size_t base = (iz * na + ia) * ny;
    double paz = 0.0;
    for (std::size_t y = 0; y < ny; ++y) paz += zay[base + y];
    if (paz <= 0.0) {
      bad.push_back(pz.levels_at(iz));
      continue;
    }
    for (std::size_t y = 0; y < ny; ++y) out.dist[y] += pz[iz] * zay[base + y] / paz;
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "overlap fails for a = " << levels_str(a) << " at confounder strata";
    for (const auto& z : bad) os << ' ' << levels_str(z);
    throw OverlapViolation(os.str(), std::move(bad));
  }
  return out;
}

OverlapReport overlap_check(const JointTable& observed,
                            std::span<const std::string> causes,
                            const FocalPartition& partition) {
  partition.validate(causes.size());
  auto aux = pick(causes, partition.auxiliary);
  auto foc = pick(causes, partition.focal);
  JointTable uf = marginalize(observed, join(aux, foc));
  std::vector<VarSpec> f_vars(uf.vars().begin() + static_cast<std::ptrdiff_t>(aux.size()), uf.vars().end());
  std::vector<VarSpec> u_vars(uf.vars().begin(), uf.vars().begin() + static_cast<std::ptrdiff_t>(aux.size()));
  const std::size_t nf = cell_count(f_vars);
  const std::size_t nu = cell_count(u_vars);
  auto f_levels = all_assignments(f_vars);
  auto u_levels = all_assignments(u_vars);

  OverlapReport rep;
  for (std::size_t iu = 0; iu < nu; ++iu) {
    double pu = 0.0;
    for (std::size_t jf = 0; jf < nf; ++jf) pu += uf[iu * nf + jf];
    if (pu <= 0.0) continue;
    OverlapRecord rec{u_levels[iu], {}};
    for (std::size_t jf = 0; jf < nf; ++jf)
      if (uf[iu * nf + jf] <= 0.0) rec.missing.push_back(f_levels[jf]);
    if (!rec.missing.empty()) rep.satisfied = false;
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

OverlapReport overlap_check(const JointTable& observed,
                            std::span<const std::string> causes,
                            const CauseZhatFn& zhat_fn) {
  std::vector<std::string> cn(causes.begin(), causes.end());
  JointTable pa = marginalize(observed, cn);
  std::vector<std::vector<Levels>> members;
  std::vector<double> mass;
  std::vector<std::vector<Levels>> missing;
  auto levels = all_assignments(pa.vars());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    int s = zhat_fn(levels[i]);
    if (s < 0) throw InvalidInput("zhat must return a non-negative class");
    auto su = static_cast<std::size_t>(s);
    if (su >= mass.size()) {
      mass.resize(su + 1, 0.0);
      missing.resize(su + 1);
    }
    mass[su] += pa[i];
    if (pa[i] <= 0.0) missing[su].push_back(levels[i]);
  }
  OverlapReport rep;
  for (std::size_t s = 0; s < mass.size(); ++s) {
    if (mass[s] <= 0.0) continue;
    if (!missing[s].empty()) rep.satisfied = false;
    rep.records.push_back({Levels{static_cast<int>(s)}, missing[s]});
  }
  return rep;
}

OverlapReport confounder_overlap(const JointTable& full,
                                 std::span<const std::string> causes,
                                 std::span<const std::string> confounders) {
  std::vector<std::string> zn(confounders.begin(), confounders.end());
  JointTable za = marginalize(full, join(zn, causes));
  std::vector<VarSpec> z_vars(za.vars().begin(), za.vars().begin() + static_cast<std::ptrdiff_t>(zn.size()));
  std::vector<VarSpec> a_vars(za.vars().begin() + static_cast<std::ptrdiff_t>(zn.size()), za.vars().end());
  const std::size_t na = cell_count(a_vars);
  auto z_levels = all_assignments(z_vars);
  auto a_levels = all_assignments(a_vars);
  OverlapReport rep;
  for (std::size_t iz = 0; iz < z_levels.size(); ++iz) {
    double pz = 0.0;
    for (std::size_t ia = 0; ia < na; ++ia) pz += za[iz * na + ia];
    if (pz <= 0.0) continue;
    OverlapRecord rec{z_levels[iz], {}};
    for (std::size_t ia = 0; ia < na; ++ia)
      if (za[iz * na + ia] <= 0.0) rec.missing.push_back(a_levels[ia]);
    if (!rec.missing.empty()) rep.satisfied = false;
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

PotentialOutcomeDist focal_estimand(const JointTable& observed,
                                    std::span<const std::string> causes,
                                    const std::string& outcome,
                                    const FocalPartition& partition,
                                    std::span<const int> a_focal) {
  partition.validate(causes.size());
  if (a_focal.size() != partition.focal.size())
    throw InvalidInput("focal assignment has the wrong length");
  auto aux = pick(causes, partition.auxiliary);
  auto foc = pick(causes, partition.focal);
  JointTable t = marginalize(observed, join(join(aux, foc), std::vector<std::string>{outcome}));
  std::vector<VarSpec> u_vars(t.vars().begin(), t.vars().begin() + static_cast<std::ptrdiff_t>(aux.size()));
  std::vector<VarSpec> f_vars(t.vars().begin() + static_cast<std::ptrdiff_t>(aux.size()),
                              t.vars().end() - 1);
  const std::size_t nu = cell_count(u_vars);
  const std::size_t nf = cell_count(f_vars);
  const auto ny = static_cast<std::size_t>(t.vars().back().card);
  std::size_t jf = 0;
  for (std::size_t k = 0; k < f_vars.size(); ++k) {
    if (a_focal[k] < 0 || a_focal[k] >= f_vars[k].card)
      throw InvalidInput("focal level out of range");
    jf = jf * static_cast<std::size_t>(f_vars[k].card) + static_cast<std::size_t>(a_focal[k]);
  }
  auto u_levels = all_assignments(u_vars);

  PotentialOutcomeDist out{Levels(a_focal.begin(), a_focal.end()), std::vector<double>(ny, 0.0)};
  std::vector<Levels> bad;
  for (std::size_t iu = 0; iu < nu; ++iu) {
    double pu = 0.0;
    for (std::size_t i = iu * nf * ny; i < (iu + 1) * nf * ny; ++i) pu += t[i];
    if (pu <= 0.0) continue;
    const std::size_t base = (iu * nf + jf) * ny;
    double pfu = 0.0;
    for (std::size_t y = 0; y < ny; ++y) pfu += t[base + y];
    if (pfu <= 0.0) {
      bad.push_back(u_levels[iu]);
      continue;
    }
    for (std::size_t y = 0; y < ny; ++y) out.dist[y] += pu * t[base + y] / pfu;
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "overlap fails for focal value " << levels_str(a_focal)
       << " at auxiliary strata";
    for (const auto& u : bad) os << ' ' << levels_str(u);
    throw OverlapViolation(os.str(), std::move(bad));
  }
  return out;
}

std::vector<double> counterfactual_estimand(const JointTable& observed,
                                            std::span<const std::string> causes,
                                            const std::string& outcome,
                                            std::span<const int> a,
                                            std::span<const int> a_prime,
                                            const CauseZhatFn& zhat_fn) {
  if (a.size() != causes.size() || a_prime.size() != causes.size())
    throw InvalidInput("cause assignment has the wrong length");
  int za = zhat_fn(a);
  int zb = zhat_fn(a_prime);
  if (za != zb) throw ZhatMismatch(za, zb);
  std::vector<std::string> names(causes.begin(), causes.end());
  names.push_back(outcome);
  JointTable ay = marginalize(observed, names);
  Assignment ev;
  for (std::size_t k = 0; k < causes.size(); ++k) ev.emplace_back(causes[k], a_prime[k]);
  JointTable cond = condition(ay, ev);
  return {cond.probs().begin(), cond.probs().end()};
}

std::vector<double> structural_focal_po(const ScmSpec& scm,
                                        const FocalPartition& partition,
                                        std::span<const int> a_focal) {
  const std::size_t m = scm.causes.size();
  partition.validate(m);
  if (a_focal.size() != partition.focal.size())
    throw InvalidInput("focal assignment has the wrong length");
  std::vector<VarSpec> aux_vars;
  for (std::size_t k : partition.auxiliary) aux_vars.push_back(scm.causes[k]);
  std::vector<double> out(static_cast<std::size_t>(scm.y.card), 0.0);
  Levels parents(m + 1);
  for (std::size_t i = 0; i < partition.focal.size(); ++i)
    parents[partition.focal[i]] = a_focal[i];
  for (const auto& u : all_assignments(aux_vars)) {
    for (std::size_t i = 0; i < u.size(); ++i) parents[partition.auxiliary[i]] = u[i];
    for (int z = 0; z < scm.z.card; ++z) {
      double w = scm.p_z[z];
      for (std::size_t i = 0; i < u.size(); ++i)
        w *= scm.p_a_given_z[partition.auxiliary[i]].row(static_cast<std::size_t>(z))[u[i]];
      if (w == 0.0) continue;
      parents[m] = z;
      auto row = scm.p_y_given_az.row(parents);
      for (int y = 0; y < scm.y.card; ++y) out[y] += w * row[y];
    }
  }
  return out;
}

std::vector<double> structural_counterfactual(const ScmSpec& scm,
                                              std::span<const int> a,
                                              std::span<const int> a_prime) {
  const std::size_t m = scm.causes.size();
  if (a.size() != m || a_prime.size() != m)
    throw InvalidInput("cause assignment has the wrong length");
  std::vector<double> post(static_cast<std::size_t>(scm.z.card));
  double total = 0.0;
  for (int z = 0; z < scm.z.card; ++z) {
    double p = scm.p_z[z];
    for (std::size_t k = 0; k < m; ++k)
      p *= scm.p_a_given_z[k].row(static_cast<std::size_t>(z))[a[k]];
    post[z] = p;
    total += p;
  }
  if (total <= 0.0) throw ZeroProbabilityEvidence("P(A = a) = 0");
  std::vector<double> out(static_cast<std::size_t>(scm.y.card), 0.0);
  Levels parents(a_prime.begin(), a_prime.end());
  parents.push_back(0);
  for (int z = 0; z < scm.z.card; ++z) {
    parents[m] = z;
    auto row = scm.p_y_given_az.row(parents);
    for (int y = 0; y < scm.y.card; ++y) out[y] += post[z] / total * row[y];
  }
  return out;
}

}  // namespace mcause
