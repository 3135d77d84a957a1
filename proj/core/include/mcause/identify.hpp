#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcause/joint_table.hpp"
#include "mcause/scm.hpp"

namespace mcause {

// Split of the causes into focal causes (intervened on) and auxiliary causes
// (used as measurements of the confounder). Indices are 0-based positions in
// the cause list.
struct FocalPartition {
  std::vector<std::size_t> focal;
  std::vector<std::size_t> auxiliary;

  // Focal set as given, auxiliary = the remaining causes in index order.
  static FocalPartition from_focal(std::vector<std::size_t> focal,
                                   std::size_t n_causes);
  // Disjoint, covering, focal non-empty.
  void validate(std::size_t n_causes) const;
};

struct OverlapRecord {
  Levels stratum;
  std::vector<Levels> missing;  // values with zero probability in the stratum
};

struct OverlapReport {
  std::vector<OverlapRecord> records;  // one per stratum with positive mass
  bool satisfied = true;
};

using CauseZhatFn = std::function<int(std::span<const int> a)>;

// sum_z P(z) P(Y | A = a, Z = z) from a joint that includes the confounders.
// Throws OverlapViolation listing every z with P(z) > 0 but P(A = a, z) = 0.
PotentialOutcomeDist adjust(const JointTable& full,
                            std::span<const std::string> causes,
                            const std::string& outcome,
                            std::span<const std::string> confounders,
                            std::span<const int> a);

// Focal-intervention distribution from observables only:
//   sum_u P(A_aux = u) P(Y | A_focal = a_focal, A_aux = u).
// Valid when the confounder is a function of the auxiliary causes. Throws
// OverlapViolation with the auxiliary strata u (P(u) > 0) where
// P(a_focal, u) = 0. `a_focal` follows the order of partition.focal.
PotentialOutcomeDist focal_estimand(const JointTable& observed,
                                    std::span<const std::string> causes,
                                    const std::string& outcome,
                                    const FocalPartition& partition,
                                    std::span<const int> a_focal);

// P(Y(a') | A = a) = P(Y | A = a') for zhat(a) = zhat(a'). Throws ZhatMismatch
// when the two assignments fall in different zhat classes and
// ZeroProbabilityEvidence when P(A = a') = 0.
std::vector<double> counterfactual_estimand(const JointTable& observed,
                                            std::span<const std::string> causes,
                                            const std::string& outcome,
                                            std::span<const int> a,
                                            std::span<const int> a_prime,
                                            const CauseZhatFn& zhat_fn);

// Strata = auxiliary levels; missing = focal values absent from the stratum.
OverlapReport overlap_check(const JointTable& observed,
                            std::span<const std::string> causes,
                            const FocalPartition& partition);
// Strata = zhat classes; missing = cause assignments mapped to the class but
// with zero probability.
OverlapReport overlap_check(const JointTable& observed,
                            std::span<const std::string> causes,
                            const CauseZhatFn& zhat_fn);
// Strata = confounder levels; missing = cause assignments with P(a, z) = 0.
OverlapReport confounder_overlap(const JointTable& full,
                                 std::span<const std::string> causes,
                                 std::span<const std::string> confounders);

// Structural reference values used to check the observable-only formulas.
// Focal intervention with auxiliary causes and Z left at their natural law:
//   sum_{z,u} P(z) P(u | z) P(Y | a_focal, u, z).
std::vector<double> structural_focal_po(const ScmSpec& scm,
                                        const FocalPartition& partition,
                                        std::span<const int> a_focal);
// P(Y(a') | A = a) = sum_z P(z | A = a) P(Y | A = a', Z = z).
std::vector<double> structural_counterfactual(const ScmSpec& scm,
                                              std::span<const int> a,
                                              std::span<const int> a_prime);

}  // namespace mcause
