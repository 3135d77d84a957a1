#include "mcause/scm.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "mcause/copula.hpp"
#include "mcause/error.hpp"
#include "mcause/random.hpp"

namespace mcause {
namespace {

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidInput(what + ": entries must be finite and non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > kNormTolerance)
    throw InvalidInput(what + ": row does not sum to 1");
}

std::vector<double> uniform_row(int card) {
  return std::vector<double>(static_cast<std::size_t>(card), 1.0 / card);
}

}  // namespace

std::size_t ConditionalTable::row_index(std::span<const int> parent_levels) const {
  if (parent_levels.size() != parents.size())
    throw InvalidInput("wrong number of parent levels for P(" + child.name +
                       " | ...)");
  std::size_t r = 0;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (parent_levels[i] < 0 || parent_levels[i] >= parents[i].card)
      throw InvalidInput("parent level out of range for '" + parents[i].name +
                         "'");
    r = r * static_cast<std::size_t>(parents[i].card) +
        static_cast<std::size_t>(parent_levels[i]);
  }
  return r;
}

void ConditionalTable::validate() const {
  if (child.card < 1) throw InvalidInput("child cardinality < 1");
  std::size_t rows = row_count();
  if (values.size() != rows * static_cast<std::size_t>(child.card))
    throw InvalidInput("P(" + child.name + " | ...) has " +
                       std::to_string(values.size()) + " entries, expected " +
                       std::to_string(rows * child.card));
  for (std::size_t r = 0; r < rows; ++r)
    check_distribution(row(r), "P(" + child.name + " | ...) row " +
                                   std::to_string(r));
}

void ScmSpec::validate() const {
  if (causes.size() < 2) throw InvalidInput("an ScmSpec needs at least two causes");
  std::set<std::string> names;
  auto add = [&](const VarSpec& v) {
    if (v.name.empty()) throw InvalidInput("variable name must be non-empty");
    if (v.card < 1) throw InvalidInput("'" + v.name + "' has cardinality < 1");
    if (!names.insert(v.name).second)
      throw InvalidInput("duplicate variable '" + v.name + "'");
  };
  add(z);
  add(y);
  for (const auto& c : causes) add(c);
  if (x) add(*x);

  if (p_z.size() != static_cast<std::size_t>(z.card))
    throw InvalidInput("P(Z) has the wrong length");
  check_distribution(p_z, "P(Z)");

  if (p_a_given_z.size() != causes.size())
    throw InvalidInput("need one P(A(k) | Z) table per cause");
  for (std::size_t k = 0; k < causes.size(); ++k) {
    const auto& t = p_a_given_z[k];
    if (t.parents != std::vector<VarSpec>{z} || t.child != causes[k])
      throw InvalidInput("P(" + causes[k].name +
                         " | Z) must have Z as its only parent");
    t.validate();
  }
  if (x.has_value() != p_x_given_z.has_value())
    throw InvalidInput("covariate X and P(X | Z) must be given together");
  if (x) {
    if (p_x_given_z->parents != std::vector<VarSpec>{z} ||
        p_x_given_z->child != *x)
      throw InvalidInput("P(X | Z) must have Z as its only parent");
    p_x_given_z->validate();
  }
  std::vector<VarSpec> y_parents = causes;
  y_parents.push_back(z);
  if (p_y_given_az.parents != y_parents || p_y_given_az.child != y)
    throw InvalidInput("P(Y | A, Z) must have parents (causes..., Z)");
  p_y_given_az.validate();
}

std::vector<std::string> ScmSpec::cause_names() const {
  std::vector<std::string> out;
  for (const auto& c : causes) out.push_back(c.name);
  return out;
}

std::vector<std::string> ScmSpec::observed_names() const {
  auto out = cause_names();
  if (x) out.push_back(x->name);
  out.push_back(y.name);
  return out;
}

std::vector<Levels> all_assignments(std::span<const VarSpec> vars) {
  std::vector<Levels> out;
  Levels lv(vars.size(), 0);
  cell_count(vars);
  do out.push_back(lv);
  while (next_levels(lv, vars));
  return out;
}

PotentialOutcomeDist ground_truth_po(const ScmSpec& scm, std::span<const int> a) {
  if (a.size() != scm.causes.size())
    throw InvalidInput("cause assignment has the wrong length");
  PotentialOutcomeDist out{Levels(a.begin(), a.end()),
                           std::vector<double>(scm.y.card, 0.0)};
  Levels parents(a.begin(), a.end());
  parents.push_back(0);
  for (int z = 0; z < scm.z.card; ++z) {
    parents.back() = z;
    auto row = scm.p_y_given_az.row(parents);
    for (int y = 0; y < scm.y.card; ++y) out.dist[y] += scm.p_z[z] * row[y];
  }
  return out;
}

JointTable structural_joint(const ScmSpec& scm) {
  scm.validate();
  std::vector<VarSpec> vars = scm.causes;
  if (scm.x) vars.push_back(*scm.x);
  vars.push_back(scm.y);
  vars.push_back(scm.z);
  const std::size_t m = scm.causes.size();
  const bool has_x = scm.x.has_value();

  std::vector<double> probs;
  probs.reserve(cell_count(vars));
  Levels lv(vars.size(), 0);
  Levels y_parents(m + 1);
  do {
    int z = lv.back();
    int y = lv[vars.size() - 2];
    double p = scm.p_z[z];
    for (std::size_t k = 0; k < m; ++k) {
      p *= scm.p_a_given_z[k].row(static_cast<std::size_t>(z))[lv[k]];
      y_parents[k] = lv[k];
    }
    if (has_x) p *= scm.p_x_given_z->row(static_cast<std::size_t>(z))[lv[m]];
    y_parents[m] = z;
    p *= scm.p_y_given_az.row(y_parents)[y];
    probs.push_back(p);
  } while (next_levels(lv, vars));
  return JointTable(std::move(vars), std::move(probs));
}

JointTable observed_joint(const ScmSpec& scm) {
  return marginalize(structural_joint(scm), scm.observed_names());
}

SampleResult sample(const ScmSpec& scm, std::size_t n, std::uint64_t seed) {
  scm.validate();
  if (n < 1) throw InvalidInput("sample size must be at least 1");
  const std::size_t m = scm.causes.size();
  std::vector<VarSpec> cols = scm.causes;
  if (scm.x) cols.push_back(*scm.x);
  cols.push_back(scm.y);

  std::vector<int> values;
  values.reserve(n * cols.size());
  std::vector<int> hidden(n);
  Levels y_parents(m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, 0, i);
    int z = rng.categorical(scm.p_z);
    hidden[i] = z;
    for (std::size_t k = 0; k < m; ++k) {
      y_parents[k] = rng.categorical(scm.p_a_given_z[k].row(static_cast<std::size_t>(z)));
      values.push_back(y_parents[k]);
    }
    if (scm.x)
      values.push_back(rng.categorical(scm.p_x_given_z->row(static_cast<std::size_t>(z))));
    y_parents[m] = z;
    values.push_back(rng.categorical(scm.p_y_given_az.row(y_parents)));
  }
  return {Dataset(std::move(cols), std::move(values)), std::move(hidden)};
}

ScmSpec random_scm(const RandomScmOptions& o, std::uint64_t seed) {
  if (o.z_card < 1 || o.n_causes < 2 || o.cause_card < 1 || o.y_card < 1 ||
      o.x_card < 0 || !(o.concentration > 0.0))
    throw InvalidInput("invalid random SCM options");
  Rng rng(seed, 1, 0);
  auto fill = [&](ConditionalTable& t) {
    std::size_t rows = t.row_count();
    t.values.clear();
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = dirichlet(rng, static_cast<std::size_t>(t.child.card),
                           o.concentration);
      t.values.insert(t.values.end(), row.begin(), row.end());
    }
  };

  ScmSpec scm;
  scm.z = {"Z", o.z_card};
  scm.y = {"Y", o.y_card};
  for (int k = 0; k < o.n_causes; ++k)
    scm.causes.push_back({"A" + std::to_string(k + 1), o.cause_card});
  scm.p_z = dirichlet(rng, static_cast<std::size_t>(o.z_card), o.concentration);
  for (const auto& c : scm.causes) {
    ConditionalTable t{{scm.z}, c, {}};
    fill(t);
    scm.p_a_given_z.push_back(std::move(t));
  }
  if (o.x_card > 0) {
    scm.x = VarSpec{"X", o.x_card};
    ConditionalTable t{{scm.z}, *scm.x, {}};
    fill(t);
    scm.p_x_given_z = std::move(t);
  }
  std::vector<VarSpec> parents = scm.causes;
  parents.push_back(scm.z);
  scm.p_y_given_az = {parents, scm.y, {}};
  fill(scm.p_y_given_az);
  return scm;
}

ReadBack read_back_structure(const JointTable& full, const ScmSpec& shape) {
  ReadBack out{shape, {}};
  ScmSpec& scm = out.scm;
  const std::string& zn = shape.z.name;
  const std::string& yn = shape.y.name;
  auto causes = shape.cause_names();

  JointTable pz = marginalize(full, {zn});
  scm.p_z.assign(pz.probs().begin(), pz.probs().end());

  for (std::size_t k = 0; k < causes.size(); ++k) {
    JointTable za = marginalize(full, {zn, causes[k]});
    auto& t = scm.p_a_given_z[k];
    t.values.clear();
    for (int z = 0; z < shape.z.card; ++z) {
      if (pz[static_cast<std::size_t>(z)] > 0.0) {
        for (int a = 0; a < shape.causes[k].card; ++a)
          t.values.push_back(za.at(std::vector<int>{z, a}) / pz[static_cast<std::size_t>(z)]);
      } else {
        auto u = uniform_row(shape.causes[k].card);
        t.values.insert(t.values.end(), u.begin(), u.end());
      }
    }
  }

  std::vector<std::string> order = causes;
  order.push_back(zn);
  order.push_back(yn);
  JointTable azy = marginalize(full, order);
  std::vector<std::string> az_names(order.begin(), order.end() - 1);
  JointTable az = marginalize(full, az_names);
  auto& ty = scm.p_y_given_az;
  ty.values.clear();
  const auto ny = static_cast<std::size_t>(shape.y.card);
  for (std::size_t r = 0; r < az.size(); ++r) {
    if (az[r] > 0.0) {
      for (std::size_t y = 0; y < ny; ++y)
        ty.values.push_back(azy[r * ny + y] / az[r]);
    } else {
      auto u = uniform_row(shape.y.card);
      ty.values.insert(ty.values.end(), u.begin(), u.end());
      out.unidentified_rows.push_back(az.levels_at(r));
    }
  }
  scm.validate();
  return out;
}

ConfoundedPair make_confounded_pair(const ScmSpec& tmpl,
                                    std::span<const int> a_star) {
  tmpl.validate();
  auto causes = tmpl.cause_names();
  std::vector<std::string> ayz = causes;
  ayz.push_back(tmpl.y.name);
  ayz.push_back(tmpl.z.name);
  JointTable full = marginalize(structural_joint(tmpl), ayz);

  auto truth = ground_truth_po(tmpl, a_star);
  Assignment ev;
  for (std::size_t k = 0; k < causes.size(); ++k)
    ev.emplace_back(causes[k], a_star[k]);
  std::vector<std::string> ay(ayz.begin(), ayz.end() - 1);
  JointTable naive = condition(marginalize(full, ay), ev);
  if (total_variation(truth.dist, naive.probs()) <= 1e-12) {
    std::ostringstream os;
    os << "template has no confounding at a* (P(Y(a*)) = P(Y | A = a*))";
    throw NoConfounding(os.str());
  }

  std::vector<std::string> y_names{tmpl.y.name};
  std::vector<std::string> z_names{tmpl.z.name};
  auto dec = decompose_joint(full, causes, y_names, z_names);
  auto flat = CopulaGrid::independence(dec.outcome_copula.vars_v,
                                       dec.outcome_copula.vars_w,
                                       dec.outcome_copula.cond_vars);
  JointTable recomposed =
      compose_joint(dec.observed, dec.prior_z, dec.factor_copula, flat);
  ReadBack rb = read_back_structure(recomposed, tmpl);

  ConfoundedPair pair{tmpl, std::move(rb.scm), Levels(a_star.begin(), a_star.end()),
                      0.0, std::move(rb.unidentified_rows)};
  pair.gap = total_variation(truth.dist,
                             ground_truth_po(pair.independent, a_star).dist);
  return pair;
}

ScmSpec demo_template() {
  ScmSpec scm;
  scm.z = {"Z", 2};
  scm.y = {"Y", 2};
  scm.p_z = {0.5, 0.5};
  for (int k = 1; k <= 3; ++k) {
    VarSpec c{"A" + std::to_string(k), 2};
    scm.causes.push_back(c);
    scm.p_a_given_z.push_back({{scm.z}, c, {0.8, 0.2, 0.2, 0.8}});
  }
  std::vector<VarSpec> parents = scm.causes;
  parents.push_back(scm.z);
  scm.p_y_given_az = {parents, scm.y, {}};
  for (const auto& lv : all_assignments(parents)) {
    double mean_a = (lv[0] + lv[1] + lv[2]) / 3.0;
    double p1 = 0.1 + 0.3 * mean_a + 0.5 * lv[3];
    scm.p_y_given_az.values.push_back(1.0 - p1);
    scm.p_y_given_az.values.push_back(p1);
  }
  scm.validate();
  return scm;
}

}  // namespace mcause
