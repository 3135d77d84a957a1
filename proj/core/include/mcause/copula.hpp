#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcause/joint_table.hpp"

namespace mcause {

// Discrete copula density c(v, w | cond) = P(v, w | cond) / (P(v | cond) P(w | cond)).
//
// Cells are stored row-major over the layout (cond..., v..., w...). A cell is
// std::nullopt (UNDEFINED) exactly when P(cond, v) = 0 or P(cond, w) = 0; such
// cells mark where the dependence structure is not determined by the joint.
struct CopulaGrid {
  std::vector<VarSpec> vars_v;
  std::vector<VarSpec> vars_w;
  std::vector<VarSpec> cond_vars;
  std::vector<std::optional<double>> values;

  // Every cell defined and equal to 1.
  static CopulaGrid independence(std::vector<VarSpec> vars_v,
                                 std::vector<VarSpec> vars_w,
                                 std::vector<VarSpec> cond_vars = {});

  std::vector<VarSpec> layout() const;
  std::size_t flat_index(std::span<const int> cond, std::span<const int> v,
                         std::span<const int> w) const;
  std::optional<double> at(std::span<const int> cond, std::span<const int> v,
                           std::span<const int> w) const {
    return values[flat_index(cond, v, w)];
  }
  std::size_t undefined_count() const;
};

CopulaGrid copula_density(const JointTable& table,
                          std::span<const std::string> group_v,
                          std::span<const std::string> group_w,
                          std::span<const std::string> cond_vars = {});

// The three factors of
//   P(A, Y, Z) = P(A, Y) * [P(Z) c(Z, A)] * c(Y, Z | A).
// factor_copula has v = Z, w = A; outcome_copula has v = Y, w = Z, cond = A.
struct JointDecomposition {
  JointTable observed;
  JointTable prior_z;
  CopulaGrid factor_copula;
  CopulaGrid outcome_copula;
};

// Recombines the factors into a table over (A..., Y..., Z...). The variable
// groups are read from the copula grids. Cells whose observed, prior or
// factor-copula factor is zero are zero; elsewhere the outcome copula must be
// defined. Throws InconsistentFactors when the product is not normalized.
JointTable compose_joint(const JointTable& observed, const JointTable& prior_z,
                         const CopulaGrid& factor_copula,
                         const CopulaGrid& outcome_copula);

JointDecomposition decompose_joint(const JointTable& full,
                                   std::span<const std::string> causes,
                                   std::span<const std::string> outcome,
                                   std::span<const std::string> latent);

}  // namespace mcause
