#include "mcause/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcause/error.hpp"
#include "mcause/simplex.hpp"

namespace mcause {
namespace {

std::vector<double> checked_distribution(std::span<const double> p,
                                         const char* what) {
  if (p.empty()) throw InfeasibleMargins(std::string(what) + " is empty");
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InfeasibleMargins(std::string(what) + " has a negative or non-finite entry");
    s += v;
  }
  if (std::abs(s - 1.0) > kNormTolerance)
    throw InfeasibleMargins(std::string(what) + " does not sum to 1");
  std::vector<double> out(p.begin(), p.end());
  for (auto& v : out) v /= s;
  return out;
}

struct Problem {
  std::vector<double> my, mz, prior;
  std::vector<std::size_t> support;  // z with margin_z > 0
  std::vector<int> unsupported;      // z with margin_z = 0
  std::size_t ny = 0, nz = 0;
  std::size_t argmin = 0, argmax = 0;
};

Problem setup(std::span<const double> margin_y, std::span<const double> margin_z,
              std::span<const double> prior_z, const LinearEstimand& est) {
  Problem p;
  p.my = checked_distribution(margin_y, "P(Y | A = a)");
  p.mz = checked_distribution(margin_z, "P(Z | A = a)");
  p.prior = checked_distribution(prior_z, "P(Z)");
  if (p.mz.size() != p.prior.size())
    throw InfeasibleMargins("P(Z | A = a) and P(Z) differ in length");
  if (est.weights.size() != p.my.size())
    throw InfeasibleMargins("estimand weights differ in length from P(Y | A = a)");
  p.ny = p.my.size();
  p.nz = p.mz.size();
  for (std::size_t z = 0; z < p.nz; ++z) {
    if (p.mz[z] > 0.0) {
      p.support.push_back(z);
    } else {
      p.unsupported.push_back(static_cast<int>(z));
    }
  }
  const auto& g = est.weights;
  p.argmin = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
  p.argmax = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
  return p;
}

// LP over the outcome model r(y, s) = q(y, s) / P(s | A = a) on supported s.
// Working with r rather than q keeps the objective and the row-sum
// constraints free of 1 / P(s | A = a) factors, which are huge for nearly
// unsupported s. `budget` splits the deviation from the independence copula
// as P(s | A = a) (r(y, s) - P(y | A = a)) = d+(y, s) - d-(y, s) with
// sum (d+ + d-) <= budget, the L1 distance of q from that copula.
LinearProgram build_lp(const Problem& p, const LinearEstimand& est,
                       std::optional<double> budget, double sign) {
  const std::size_t ns = p.support.size();
  const std::size_t nr = p.ny * ns;
  LinearProgram lp;
  lp.n_vars = budget ? 3 * nr : nr;
  lp.objective.assign(lp.n_vars, 0.0);
  for (std::size_t y = 0; y < p.ny; ++y)
    for (std::size_t s = 0; s < ns; ++s)
      lp.objective[y * ns + s] = sign * est.weights[y] * p.prior[p.support[s]];
  for (std::size_t s = 0; s < ns; ++s) {
    LinearProgram::Row r{std::vector<double>(lp.n_vars, 0.0), 1.0};
    for (std::size_t y = 0; y < p.ny; ++y) r.coeffs[y * ns + s] = 1.0;
    lp.equalities.push_back(std::move(r));
  }
  // One margin row is implied by the others and the row sums. Keeping it
  // would make the system inconsistent by the rounding in the margins, and
  // the phase-1 residual is amplified by 1 / P(s | A = a) in r.
  const auto implied = static_cast<std::size_t>(std::max_element(p.my.begin(), p.my.end()) - p.my.begin());
  for (std::size_t y = 0; y < p.ny; ++y) {
    if (y == implied) continue;
    LinearProgram::Row r{std::vector<double>(lp.n_vars, 0.0), p.my[y]};
    for (std::size_t s = 0; s < ns; ++s) r.coeffs[y * ns + s] = p.mz[p.support[s]];
    lp.equalities.push_back(std::move(r));
  }
  if (budget) {
    LinearProgram::Row total{std::vector<double>(lp.n_vars, 0.0), *budget};
    for (std::size_t y = 0; y < p.ny; ++y)
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t i = y * ns + s;
        const double mz = p.mz[p.support[s]];
        LinearProgram::Row dev{std::vector<double>(lp.n_vars, 0.0), mz * p.my[y]};
        dev.coeffs[i] = mz;
        dev.coeffs[nr + i] = -1.0;
        dev.coeffs[2 * nr + i] = 1.0;
        lp.equalities.push_back(std::move(dev));
        total.coeffs[nr + i] = 1.0;
        total.coeffs[2 * nr + i] = 1.0;
      }
    lp.upper_bounds.push_back(std::move(total));
  }
  return lp;
}

// Expands an LP solution to the (y, z) joint and outcome model.
void expand(const Problem& p, const std::vector<double>& x, bool lower,
            std::vector<double>& q, std::vector<double>& model) {
  const std::size_t ns = p.support.size();
  q.assign(p.ny * p.nz, 0.0);
  model.assign(p.ny * p.nz, 0.0);
  for (std::size_t y = 0; y < p.ny; ++y)
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t z = p.support[s];
      model[y * p.nz + z] = x[y * ns + s];
      q[y * p.nz + z] = x[y * ns + s] * p.mz[z];
    }
  const std::size_t pick = lower ? p.argmin : p.argmax;
  for (int z : p.unsupported) model[pick * p.nz + static_cast<std::size_t>(z)] = 1.0;
}

// Budget 0 pins q to the independence copula, so the supported part of the
// feasible set is the single vertex r(y, s) = P(y | A = a). Solved directly:
// the LP would have to resolve constraints scaled by P(s | A = a), which are
// tiny for nearly unsupported s.
IgnoranceRegion independence_region(const Problem& p, const LinearEstimand& est) {
  IgnoranceRegion reg;
  reg.estimand = est.description;
  reg.budget = 0.0;
  reg.unsupported_z = p.unsupported;
  reg.solver = BoundSolver::kVertexEnumeration;
  std::vector<double> x(p.ny * p.support.size());
  for (std::size_t y = 0; y < p.ny; ++y)
    for (std::size_t s = 0; s < p.support.size(); ++s) x[y * p.support.size() + s] = p.my[y];
  expand(p, x, true, reg.attained_q_lower, reg.outcome_model_lower);
  expand(p, x, false, reg.attained_q_upper, reg.outcome_model_upper);
  reg.lower = estimand_value(reg.outcome_model_lower, p.prior, est);
  reg.upper = estimand_value(reg.outcome_model_upper, p.prior, est);
  return reg;
}

IgnoranceRegion solve_region(const Problem& p, const LinearEstimand& est,
                             std::optional<double> budget) {
  IgnoranceRegion reg;
  reg.estimand = est.description;
  reg.budget = budget;
  reg.unsupported_z = p.unsupported;
  for (int side = 0; side < 2; ++side) {
    const bool lower = side == 0;
    LpSolution sol = solve_lp(build_lp(p, est, budget, lower ? 1.0 : -1.0));
    if (sol.status != LpStatus::kOptimal) {
      std::ostringstream os;
      os << "bound LP did not reach optimality (status " << static_cast<int>(sol.status) << ")";
      throw Error(os.str());
    }
    auto& q = lower ? reg.attained_q_lower : reg.attained_q_upper;
    auto& model = lower ? reg.outcome_model_lower : reg.outcome_model_upper;
    expand(p, sol.x, lower, q, model);
    double v = estimand_value(model, p.prior, est);
    (lower ? reg.lower : reg.upper) = v;
  }
  if (reg.lower > reg.upper + 1e-9) throw Error("bound LP returned lower > upper");
  if (reg.lower > reg.upper) reg.lower = reg.upper;
  return reg;
}

}  // namespace

LinearEstimand LinearEstimand::mean(int y_card) {
  LinearEstimand e{"E[Y(a)]", {}};
  for (int y = 0; y < y_card; ++y) e.weights.push_back(y);
  return e;
}

LinearEstimand LinearEstimand::probability_of(int y_card, int level) {
  if (level < 0 || level >= y_card) throw InvalidInput("outcome level out of range");
  LinearEstimand e{"P(Y(a) = " + std::to_string(level) + ")",
                   std::vector<double>(static_cast<std::size_t>(y_card), 0.0)};
  e.weights[level] = 1.0;
  return e;
}

double estimand_value(std::span<const double> outcome_model,
                      std::span<const double> prior_z,
                      const LinearEstimand& estimand) {
  const std::size_t ny = estimand.weights.size();
  const std::size_t nz = prior_z.size();
  if (outcome_model.size() != ny * nz) throw InvalidInput("outcome model has the wrong size");
  double v = 0.0;
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t z = 0; z < nz; ++z)
      v += prior_z[z] * estimand.weights[y] * outcome_model[y * nz + z];
  return v;
}

IgnoranceRegion copula_bounds(std::span<const double> margin_y,
                              std::span<const double> margin_z,
                              std::span<const double> prior_z,
                              const LinearEstimand& estimand) {
  Problem p = setup(margin_y, margin_z, prior_z, estimand);
  return solve_region(p, estimand, std::nullopt);
}

IgnoranceRegion calibrated_bounds(std::span<const double> margin_y,
                                  std::span<const double> margin_z,
                                  std::span<const double> prior_z,
                                  const LinearEstimand& estimand, double budget) {
  if (!(budget >= 0.0)) throw InvalidInput("dependence budget must be >= 0");
  Problem p = setup(margin_y, margin_z, prior_z, estimand);
  if (budget >= 2.0) {
    IgnoranceRegion reg = solve_region(p, estimand, std::nullopt);
    reg.budget = budget;
    return reg;
  }
  if (budget == 0.0) return independence_region(p, estimand);
  return solve_region(p, estimand, budget);
}

RatioBounds ratio_bounds(const IgnoranceRegion& num, const IgnoranceRegion& den) {
  if (!(den.lower > 0.0))
    throw InvalidInput("ratio bounds need a strictly positive denominator interval");
  double c[4] = {num.lower / den.lower, num.lower / den.upper,
                 num.upper / den.lower, num.upper / den.upper};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4), false};
}

double benchmark_budget(const JointTable& table,
                        std::span<const std::string> causes,
                        std::span<const std::string> strata) {
  if (causes.size() < 2) throw InvalidInput("benchmark needs at least two causes");
  std::vector<std::string> order(strata.begin(), strata.end());
  order.insert(order.end(), causes.begin(), causes.end());
  JointTable t = marginalize(table, order);
  std::vector<VarSpec> s_vars(t.vars().begin(), t.vars().begin() + static_cast<std::ptrdiff_t>(strata.size()));
  std::vector<VarSpec> a_vars(t.vars().begin() + static_cast<std::ptrdiff_t>(strata.size()), t.vars().end());
  const std::size_t ns = cell_count(s_vars);
  const std::size_t na = cell_count(a_vars);
  auto assignments = all_assignments(a_vars);
  const std::size_t m = a_vars.size();

  double worst = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    // Code of A(-k) for every assignment.
    std::vector<std::size_t> rest(na);
    std::size_t n_rest = 1;
    for (std::size_t j = 0; j < m; ++j)
      if (j != k) n_rest *= static_cast<std::size_t>(a_vars[j].card);
    for (std::size_t ia = 0; ia < na; ++ia) {
      std::size_t code = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (j != k) code = code * static_cast<std::size_t>(a_vars[j].card) + static_cast<std::size_t>(assignments[ia][j]);
      rest[ia] = code;
    }
    const auto nk = static_cast<std::size_t>(a_vars[k].card);
    double weighted = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double ps = 0.0;
      for (std::size_t ia = 0; ia < na; ++ia) ps += t[s * na + ia];
      if (ps <= 0.0) continue;
      std::vector<double> pk(nk, 0.0), pr(n_rest, 0.0), joint(nk * n_rest, 0.0);
      for (std::size_t ia = 0; ia < na; ++ia) {
        double v = t[s * na + ia] / ps;
        auto lk = static_cast<std::size_t>(assignments[ia][k]);
        pk[lk] += v;
        pr[rest[ia]] += v;
        joint[lk * n_rest + rest[ia]] += v;
      }
      double l1 = 0.0;
      for (std::size_t a = 0; a < nk; ++a)
        for (std::size_t b = 0; b < n_rest; ++b)
          l1 += std::abs(joint[a * n_rest + b] - pk[a] * pr[b]);
      weighted += ps * l1;
    }
    worst = std::max(worst, weighted);
  }
  return worst;
}

double benchmark_budget(const Dataset& causes, std::span<const int> zhat) {
  int n_strata = 1;
  for (int s : zhat) {
    if (s < 0) throw InvalidInput("zhat must be non-negative");
    n_strata = std::max(n_strata, s + 1);
  }
  std::string sname = "__zhat";
  while (causes.find(sname)) sname += "_";
  Dataset with = causes.with_column({sname, n_strata}, zhat);
  auto names = causes.names();
  std::vector<std::string> all = names;
  all.push_back(sname);
  std::vector<std::string> strata{sname};
  return benchmark_budget(empirical_table(with, all), names, strata);
}

double benchmark_budget(const ScmSpec& scm, const ZhatFn& zhat_fn) {
  scm.validate();
  const std::size_t m = scm.causes.size();
  const int nx = scm.x ? scm.x->card : 1;
  auto assignments = all_assignments(scm.causes);
  std::vector<std::pair<std::size_t, int>> cell_stratum;
  std::vector<double> mass;
  int n_strata = 1;
  for (std::size_t ia = 0; ia < assignments.size(); ++ia)
    for (int x = 0; x < nx; ++x) {
      double p = 0.0;
      for (int z = 0; z < scm.z.card; ++z) {
        double v = scm.p_z[z];
        for (std::size_t k = 0; k < m; ++k)
          v *= scm.p_a_given_z[k].row(static_cast<std::size_t>(z))[assignments[ia][k]];
        if (scm.x) v *= scm.p_x_given_z->row(static_cast<std::size_t>(z))[x];
        p += v;
      }
      int s = zhat_fn(assignments[ia], x);
      if (s < 0) throw InvalidInput("zhat must return a non-negative class");
      n_strata = std::max(n_strata, s + 1);
      cell_stratum.emplace_back(ia, s);
      mass.push_back(p);
    }
  std::vector<VarSpec> vars{{"__zhat", n_strata}};
  vars.insert(vars.end(), scm.causes.begin(), scm.causes.end());
  const std::size_t na = assignments.size();
  std::vector<double> probs(static_cast<std::size_t>(n_strata) * na, 0.0);
  for (std::size_t i = 0; i < mass.size(); ++i)
    probs[static_cast<std::size_t>(cell_stratum[i].second) * na + cell_stratum[i].first] += mass[i];
  JointTable t(vars, probs);
  auto names = scm.cause_names();
  std::vector<std::string> strata{"__zhat"};
  return benchmark_budget(t, names, strata);
}

namespace {

void fill_regions(SensitivityReport& rep, std::span<const double> budgets) {
  for (double b : budgets) {
    if (std::isinf(b) && b > 0.0) {
      rep.regions.push_back(copula_bounds(rep.margin_y, rep.margin_z, rep.prior_z, rep.estimand));
    } else {
      rep.regions.push_back(calibrated_bounds(rep.margin_y, rep.margin_z, rep.prior_z,
                                              rep.estimand, b));
    }
  }
  rep.naive = 0.0;
  for (std::size_t y = 0; y < rep.margin_y.size(); ++y)
    rep.naive += rep.estimand.weights[y] * rep.margin_y[y];
}

}  // namespace

SensitivityReport sensitivity_report(const ScmSpec& scm, std::span<const int> a,
                                     const LinearEstimand& estimand,
                                     std::span<const double> budgets) {
  scm.validate();
  const std::size_t m = scm.causes.size();
  if (a.size() != m) throw InvalidInput("cause assignment has the wrong length");
  SensitivityReport rep;
  rep.source = "true_z";
  rep.a.assign(a.begin(), a.end());
  rep.estimand = estimand;
  rep.prior_z = scm.p_z;

  auto post = [&](std::span<const int> lv) {
    std::vector<double> w(static_cast<std::size_t>(scm.z.card));
    for (int z = 0; z < scm.z.card; ++z) {
      double v = scm.p_z[z];
      for (std::size_t k = 0; k < m; ++k)
        v *= scm.p_a_given_z[k].row(static_cast<std::size_t>(z))[lv[k]];
      w[z] = v;
    }
    return w;
  };
  auto w = post(a);
  double pa = 0.0;
  for (double v : w) pa += v;
  if (pa <= 0.0) throw ZeroProbabilityEvidence("P(A = a) = 0");
  rep.margin_z = w;
  for (auto& v : rep.margin_z) v /= pa;

  rep.margin_y.assign(static_cast<std::size_t>(scm.y.card), 0.0);
  Levels parents(a.begin(), a.end());
  parents.push_back(0);
  for (int z = 0; z < scm.z.card; ++z) {
    parents[m] = z;
    auto row = scm.p_y_given_az.row(parents);
    for (int y = 0; y < scm.y.card; ++y) rep.margin_y[y] += rep.margin_z[z] * row[y];
  }
  auto po = ground_truth_po(scm, a);
  double truth = 0.0;
  for (std::size_t y = 0; y < po.dist.size(); ++y) truth += estimand.weights.at(y) * po.dist[y];
  rep.truth = truth;

  rep.benchmark = benchmark_budget(scm, [&](std::span<const int> lv, int) {
    auto pw = post(lv);
    int best = 0;
    for (int z = 1; z < static_cast<int>(pw.size()); ++z)
      if (pw[z] > pw[best]) best = z;
    return best;
  });
  fill_regions(rep, budgets);
  return rep;
}

SensitivityReport sensitivity_report(const Dataset& data,
                                     std::span<const std::string> causes,
                                     const std::string& outcome,
                                     const LatentClassModel& model,
                                     std::span<const int> a,
                                     const LinearEstimand& estimand,
                                     std::span<const double> budgets) {
  model.validate();
  if (a.size() != causes.size()) throw InvalidInput("cause assignment has the wrong length");
  if (model.n_causes != causes.size())
    throw InvalidInput("model cause count differs from the cause list");
  SensitivityReport rep;
  rep.source = "fitted_posterior";
  rep.a.assign(a.begin(), a.end());
  rep.estimand = estimand;
  rep.prior_z = model.pi;
  rep.margin_z = posterior_z(model, a);

  std::vector<std::string> ay(causes.begin(), causes.end());
  ay.push_back(outcome);
  JointTable emp = empirical_table(data, ay);
  Assignment ev;
  for (std::size_t k = 0; k < causes.size(); ++k) ev.emplace_back(causes[k], a[k]);
  JointTable cond = condition(emp, ev);
  rep.margin_y.assign(cond.probs().begin(), cond.probs().end());

  Dataset cause_data = data.select(causes);
  rep.benchmark = benchmark_budget(cause_data, zhat_column(model, cause_data));
  fill_regions(rep, budgets);
  return rep;
}

}  // namespace mcause
