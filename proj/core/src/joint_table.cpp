#include "mcause/joint_table.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mcause/error.hpp"

namespace mcause {
namespace {

std::vector<std::size_t> row_major_strides(std::span<const VarSpec> vars) {
  std::vector<std::size_t> strides(vars.size());
  std::size_t s = 1;
  for (std::size_t i = vars.size(); i-- > 0;) {
    strides[i] = s;
    s *= static_cast<std::size_t>(vars[i].card);
  }
  return strides;
}

// For each variable of `table`, its stride inside a table over `sub` (0 when
// the variable is not part of `sub`).
std::vector<std::size_t> projection_strides(const JointTable& table,
                                            std::span<const VarSpec> sub) {
  auto sub_strides = row_major_strides(sub);
  std::vector<std::size_t> out(table.rank(), 0);
  for (std::size_t k = 0; k < sub.size(); ++k)
    out[table.index_of(sub[k].name)] = sub_strides[k];
  return out;
}

}  // namespace

std::size_t cell_count(std::span<const VarSpec> vars) {
  std::size_t n = 1;
  for (const auto& v : vars) {
    if (v.card < 1)
      throw InvalidInput("variable '" + v.name + "' has cardinality < 1");
    if (n > kMaxCells / static_cast<std::size_t>(v.card))
      throw InvalidInput("table exceeds the maximum of 10^7 cells");
    n *= static_cast<std::size_t>(v.card);
  }
  return n;
}

bool next_levels(Levels& levels, std::span<const VarSpec> vars) {
  for (std::size_t i = vars.size(); i-- > 0;) {
    if (++levels[i] < vars[i].card) return true;
    levels[i] = 0;
  }
  return false;
}

JointTable::JointTable(std::vector<VarSpec> vars, std::vector<double> probs)
    : vars_(std::move(vars)), probs_(std::move(probs)) {
  std::set<std::string> seen;
  for (const auto& v : vars_) {
    if (v.name.empty()) throw InvalidInput("variable name must be non-empty");
    if (!seen.insert(v.name).second)
      throw InvalidInput("duplicate variable '" + v.name + "'");
  }
  std::size_t n = cell_count(vars_);
  if (probs_.size() != n) {
    std::ostringstream os;
    os << "table has " << probs_.size() << " entries, expected " << n;
    throw InvalidInput(os.str());
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidInput("table entries must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "table sums to " << total << ", not 1";
    throw InvalidInput(os.str());
  }
  strides_ = row_major_strides(vars_);
}

JointTable JointTable::uniform(std::vector<VarSpec> vars) {
  std::size_t n = cell_count(vars);
  return JointTable(std::move(vars),
                    std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointTable JointTable::point_mass(std::vector<VarSpec> vars,
                                  std::span<const int> levels) {
  std::size_t n = cell_count(vars);
  std::vector<double> probs(n, 0.0);
  if (levels.size() != vars.size())
    throw InvalidInput("point_mass: wrong number of levels");
  std::size_t flat = 0;
  auto strides = row_major_strides(vars);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (levels[i] < 0 || levels[i] >= vars[i].card)
      throw InvalidInput("point_mass: level out of range");
    flat += strides[i] * static_cast<std::size_t>(levels[i]);
  }
  probs[flat] = 1.0;
  return JointTable(std::move(vars), std::move(probs));
}

JointTable JointTable::product(const JointTable& left, const JointTable& right) {
  std::vector<VarSpec> vars = left.vars();
  vars.insert(vars.end(), right.vars().begin(), right.vars().end());
  std::vector<double> probs;
  probs.reserve(left.size() * right.size());
  for (double p : left.probs())
    for (double q : right.probs()) probs.push_back(p * q);
  return JointTable(std::move(vars), std::move(probs));
}

std::vector<std::string> JointTable::names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

std::optional<std::size_t> JointTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return i;
  return std::nullopt;
}

std::size_t JointTable::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw UnknownVariable(std::string(name));
}

std::size_t JointTable::flat_index(std::span<const int> levels) const {
  if (levels.size() != vars_.size())
    throw InvalidInput("wrong number of levels for table");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (levels[i] < 0 || levels[i] >= vars_[i].card)
      throw InvalidInput("level out of range for '" + vars_[i].name + "'");
    flat += strides_[i] * static_cast<std::size_t>(levels[i]);
  }
  return flat;
}

Levels JointTable::levels_at(std::size_t flat) const {
  Levels out(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    out[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return out;
}

JointTable marginalize(const JointTable& table,
                       std::span<const std::string> keep) {
  std::vector<VarSpec> kept;
  std::set<std::string> seen;
  for (const auto& name : keep) {
    if (!seen.insert(name).second)
      throw InvalidInput("duplicate variable '" + name + "' in keep set");
    kept.push_back(table.var(name));
  }
  std::vector<double> out(cell_count(kept), 0.0);
  auto proj = projection_strides(table, kept);
  Levels lv(table.rank(), 0);
  std::size_t flat = 0;
  do {
    std::size_t target = 0;
    for (std::size_t i = 0; i < lv.size(); ++i)
      target += proj[i] * static_cast<std::size_t>(lv[i]);
    out[target] += table[flat++];
  } while (next_levels(lv, table.vars()));
  return JointTable(std::move(kept), std::move(out));
}

JointTable marginalize(const JointTable& table,
                       std::initializer_list<std::string> keep) {
  std::vector<std::string> names(keep);
  return marginalize(table, std::span<const std::string>(names));
}

namespace {

// Positions and levels of the evidence, validated against `table`.
std::vector<std::pair<std::size_t, int>> resolve_evidence(
    const JointTable& table, const Assignment& evidence) {
  std::vector<std::pair<std::size_t, int>> out;
  std::set<std::size_t> seen;
  for (const auto& [name, level] : evidence) {
    std::size_t i = table.index_of(name);
    if (level < 0 || level >= table.vars()[i].card)
      throw InvalidInput("evidence level out of range for '" + name + "'");
    if (!seen.insert(i).second) {
      for (auto& [j, l] : out)
        if (j == i && l != level)
          throw InvalidInput("contradictory evidence on '" + name + "'");
      continue;
    }
    out.emplace_back(i, level);
  }
  return out;
}

bool matches(const Levels& lv,
             const std::vector<std::pair<std::size_t, int>>& ev) {
  for (const auto& [i, l] : ev)
    if (lv[i] != l) return false;
  return true;
}

}  // namespace

double probability(const JointTable& table, const Assignment& evidence) {
  auto ev = resolve_evidence(table, evidence);
  double total = 0.0;
  Levels lv(table.rank(), 0);
  std::size_t flat = 0;
  do {
    if (matches(lv, ev)) total += table[flat];
    ++flat;
  } while (next_levels(lv, table.vars()));
  return total;
}

JointTable condition(const JointTable& table, const Assignment& evidence) {
  auto ev = resolve_evidence(table, evidence);
  std::vector<VarSpec> rest;
  std::vector<bool> fixed(table.rank(), false);
  for (const auto& [i, l] : ev) fixed[i] = true;
  for (std::size_t i = 0; i < table.rank(); ++i)
    if (!fixed[i]) rest.push_back(table.vars()[i]);

  std::vector<double> out;
  out.reserve(cell_count(rest));
  double total = 0.0;
  Levels lv(table.rank(), 0);
  std::size_t flat = 0;
  // Row-major order of the remaining variables is preserved by skipping.
  do {
    if (matches(lv, ev)) {
      out.push_back(table[flat]);
      total += table[flat];
    }
    ++flat;
  } while (next_levels(lv, table.vars()));
  if (!(total > 0.0)) {
    std::ostringstream os;
    os << "conditioning event has zero probability:";
    for (const auto& [name, level] : evidence) os << ' ' << name << '=' << level;
    throw ZeroProbabilityEvidence(os.str());
  }
  for (auto& p : out) p /= total;
  return JointTable(std::move(rest), std::move(out));
}

double max_abs_diff(const JointTable& a, const JointTable& b) {
  if (a.rank() != b.rank())
    throw InvalidInput("max_abs_diff: tables hold different variables");
  for (const auto& v : a.vars())
    if (b.var(v.name).card != v.card)
      throw InvalidInput("max_abs_diff: cardinality mismatch on '" + v.name +
                         "'");
  auto aligned = marginalize(b, a.names());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - aligned[i]));
  return worst;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw InvalidInput("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double mutual_independence_gap(const JointTable& table,
                               std::span<const std::string> group,
                               std::span<const std::string> cond) {
  std::vector<std::string> names(cond.begin(), cond.end());
  names.insert(names.end(), group.begin(), group.end());
  JointTable joint = marginalize(table, names);
  std::vector<std::string> cond_names(cond.begin(), cond.end());
  JointTable p_cond = marginalize(table, cond_names);

  // P(cond, g_k) for every member of the group.
  std::vector<JointTable> singles;
  for (const auto& g : group) {
    auto n = cond_names;
    n.push_back(g);
    singles.push_back(marginalize(table, n));
  }

  const std::size_t nc = cond.size();
  double worst = 0.0;
  Levels lv(joint.rank(), 0);
  std::size_t flat = 0;
  do {
    Levels c(lv.begin(), lv.begin() + static_cast<std::ptrdiff_t>(nc));
    double pc = p_cond.at(c);
    if (pc > 0.0) {
      double prod = 1.0;
      for (std::size_t k = 0; k < group.size(); ++k) {
        Levels ck = c;
        ck.push_back(lv[nc + k]);
        prod *= singles[k].at(ck) / pc;
      }
      worst = std::max(worst, std::abs(joint[flat] / pc - prod));
    }
    ++flat;
  } while (next_levels(lv, joint.vars()));
  return worst;
}

}  // namespace mcause
