#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcause/dataset.hpp"
#include "mcause/joint_table.hpp"

namespace mcause {

// P(child | parents): one row of child.card probabilities per parent cell,
// rows in row-major order over `parents`.
struct ConditionalTable {
  std::vector<VarSpec> parents;
  VarSpec child;
  std::vector<double> values;

  std::size_t row_count() const { return cell_count(parents); }
  std::size_t row_index(std::span<const int> parent_levels) const;
  std::span<const double> row(std::size_t r) const {
    auto n = static_cast<std::size_t>(child.card);
    return {values.data() + r * n, n};
  }
  std::span<const double> row(std::span<const int> parent_levels) const {
    return row(row_index(parent_levels));
  }
  // Throws InvalidInput unless every row is a distribution (within
  // kNormTolerance).
  void validate() const;
};

// Generative model on the DAG Z -> A(k) for every cause k, Z -> X, Z -> Y,
// A -> Y. Causes have no edges between them and X has no edge from A, so the
// causes are mutually independent given Z and X is independent of A given Z.
struct ScmSpec {
  VarSpec z;
  std::optional<VarSpec> x;
  std::vector<VarSpec> causes;
  VarSpec y;
  std::vector<double> p_z;
  std::optional<ConditionalTable> p_x_given_z;
  std::vector<ConditionalTable> p_a_given_z;  // one per cause, parent Z
  ConditionalTable p_y_given_az;              // parents (A..., Z)

  void validate() const;
  std::vector<std::string> cause_names() const;
  // Observed column names: causes, then X when present, then Y.
  std::vector<std::string> observed_names() const;
};

struct PotentialOutcomeDist {
  Levels a;
  std::vector<double> dist;
};

// P(Y(a)) = sum_z P(z) P(Y | A = a, Z = z), from the structural tables.
PotentialOutcomeDist ground_truth_po(const ScmSpec& scm, std::span<const int> a);

// Full structural joint over (A..., [X], Y, Z).
JointTable structural_joint(const ScmSpec& scm);
// Structural joint with Z summed out: (A..., [X], Y).
JointTable observed_joint(const ScmSpec& scm);

struct SampleResult {
  Dataset observed;            // A..., [X], Y
  std::vector<int> hidden_z;   // diagnostics only
};

// i.i.d. ancestral samples. Row i draws from the generator named by
// (seed, i), so any subset of rows can be regenerated independently.
SampleResult sample(const ScmSpec& scm, std::size_t n, std::uint64_t seed);

struct RandomScmOptions {
  int z_card = 2;
  int n_causes = 3;
  int cause_card = 2;
  int y_card = 2;
  int x_card = 0;  // 0 = no covariate
  double concentration = 1.0;
};

// Every conditional row drawn from a symmetric Dirichlet(concentration).
ScmSpec random_scm(const RandomScmOptions& options, std::uint64_t seed);

// Builds an ScmSpec from a structural joint over (A..., Y, Z) (X is carried
// over from `shape`). Rows whose conditioning cell has zero probability are
// set to uniform and reported in `unidentified_rows` as (a..., z).
struct ReadBack {
  ScmSpec scm;
  std::vector<Levels> unidentified_rows;
};
ReadBack read_back_structure(const JointTable& full, const ScmSpec& shape);

struct ConfoundedPair {
  ScmSpec original;
  ScmSpec independent;  // outcome copula replaced by the independence copula
  Levels a_star;
  double gap = 0.0;     // TV between the two models' P(Y(a*))
  std::vector<Levels> unidentified_rows;
};

// Two models with identical observed (A, Y) joints and identical factor
// marginals P(A, Z) whose potential outcome distributions at a* differ.
// Throws NoConfounding when P(Y(a*)) equals P(Y | A = a*) in the template.
ConfoundedPair make_confounded_pair(const ScmSpec& tmpl,
                                    std::span<const int> a_star);

// Default template for the non-identification demo: binary Z strongly tied to
// Y, three binary causes.
ScmSpec demo_template();

// All cause assignments in row-major order.
std::vector<Levels> all_assignments(std::span<const VarSpec> vars);

}  // namespace mcause
