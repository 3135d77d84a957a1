#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mcause {

// Absolute tolerance for every normalization check.
inline constexpr double kNormTolerance = 1e-9;
// Dense tables larger than this are rejected.
inline constexpr std::size_t kMaxCells = 10'000'000;

struct VarSpec {
  std::string name;
  int card = 1;

  friend bool operator==(const VarSpec&, const VarSpec&) = default;
};

// Levels of an ordered list of variables.
using Levels = std::vector<int>;
// Partial assignment by variable name.
using Assignment = std::vector<std::pair<std::string, int>>;

// Number of cells in the cross product of `vars`; throws InvalidInput on an
// invalid cardinality or when the product exceeds kMaxCells.
std::size_t cell_count(std::span<const VarSpec> vars);

// Advances `levels` to the next row-major cell (last variable fastest).
// Returns false after wrapping around past the final cell.
bool next_levels(Levels& levels, std::span<const VarSpec> vars);

// Exact finite probability table over named discrete variables, stored dense
// in row-major order over the declared variable order.
class JointTable {
 public:
  // Validates names, cardinalities, non-negativity and normalization.
  JointTable(std::vector<VarSpec> vars, std::vector<double> probs);

  static JointTable uniform(std::vector<VarSpec> vars);
  static JointTable point_mass(std::vector<VarSpec> vars,
                               std::span<const int> levels);
  // Independent product; variables of `left` first.
  static JointTable product(const JointTable& left, const JointTable& right);

  const std::vector<VarSpec>& vars() const { return vars_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  std::size_t rank() const { return vars_.size(); }
  std::vector<std::string> names() const;

  std::optional<std::size_t> find(std::string_view name) const;
  // Position of `name` in vars(); throws UnknownVariable.
  std::size_t index_of(std::string_view name) const;
  const VarSpec& var(std::string_view name) const {
    return vars_[index_of(name)];
  }

  std::size_t flat_index(std::span<const int> levels) const;
  Levels levels_at(std::size_t flat) const;
  double at(std::span<const int> levels) const {
    return probs_[flat_index(levels)];
  }
  double operator[](std::size_t flat) const { return probs_[flat]; }

 private:
  std::vector<VarSpec> vars_;
  std::vector<double> probs_;
  std::vector<std::size_t> strides_;
};

// Sums out every variable not in `keep`. The result uses the order of `keep`,
// so passing all names in a new order permutes the table.
JointTable marginalize(const JointTable& table,
                       std::span<const std::string> keep);
JointTable marginalize(const JointTable& table,
                       std::initializer_list<std::string> keep);

// P(evidence); an empty assignment has probability 1.
double probability(const JointTable& table, const Assignment& evidence);

// Normalized table over the variables not fixed by `evidence`. Throws
// ZeroProbabilityEvidence when P(evidence) = 0. Conditioning on every variable
// yields a rank-0 table holding the single value 1.
JointTable condition(const JointTable& table, const Assignment& evidence);

// Largest cellwise absolute difference. The tables must hold the same
// variables, possibly in different orders.
double max_abs_diff(const JointTable& a, const JointTable& b);

// Total variation distance, half the L1 distance.
double total_variation(std::span<const double> p, std::span<const double> q);

// max over conditioning cells c with P(c) > 0 and over g of
// |P(g | c) - prod_k P(g_k | c)|, where `group` lists the variables that should
// be mutually independent given `cond`. Zero iff the group is mutually
// independent given `cond` (on the support of `cond`).
double mutual_independence_gap(const JointTable& table,
                               std::span<const std::string> group,
                               std::span<const std::string> cond);

}  // namespace mcause
