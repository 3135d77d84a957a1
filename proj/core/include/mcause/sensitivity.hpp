#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcause/ci_gate.hpp"
#include "mcause/dataset.hpp"
#include "mcause/factor_model.hpp"
#include "mcause/scm.hpp"

namespace mcause {

// Linear functional sum_y weights[y] P(Y(a) = y).
struct LinearEstimand {
  std::string description;
  std::vector<double> weights;

  static LinearEstimand mean(int y_card);
  static LinearEstimand probability_of(int y_card, int level);
};

enum class BoundSolver { kSimplex, kVertexEnumeration };

// Sharp interval for the estimand over every outcome-confounder joint
// q(y, z) = P(Y = y, Z = z | A = a) with the given margins (the Frechet
// class), plus unrestricted outcome models where P(z | A = a) = 0.
struct IgnoranceRegion {
  std::string estimand;
  double lower = 0.0;
  double upper = 0.0;
  // Optimizing joints q(y, z), row-major (y, z); zero on unsupported z.
  std::vector<double> attained_q_lower;
  std::vector<double> attained_q_upper;
  // Matching outcome models P(y | Z = z, A = a), row-major (y, z). Unsupported
  // z columns hold the point mass chosen by the worst-case extension.
  std::vector<double> outcome_model_lower;
  std::vector<double> outcome_model_upper;
  BoundSolver solver = BoundSolver::kSimplex;
  std::optional<double> budget;  // nullopt = unrestricted copula
  std::vector<int> unsupported_z;
  bool sharp = true;

  double width() const { return upper - lower; }
};

// sum_z P(z) sum_y g(y) P(y | z, a) for an outcome model laid out (y, z).
double estimand_value(std::span<const double> outcome_model,
                      std::span<const double> prior_z,
                      const LinearEstimand& estimand);

// Throws InfeasibleMargins when a margin or the prior is not a distribution
// or the lengths disagree with the estimand.
IgnoranceRegion copula_bounds(std::span<const double> margin_y,
                              std::span<const double> margin_z,
                              std::span<const double> prior_z,
                              const LinearEstimand& estimand);

// Adds sum_{y,z} |q(y, z) - margin_y(y) margin_z(z)| <= budget, the L1
// deviation from the independence copula (at most 2). Budget 0 gives the
// independence-copula point; any budget >= 2 reproduces copula_bounds.
IgnoranceRegion calibrated_bounds(std::span<const double> margin_y,
                                  std::span<const double> margin_z,
                                  std::span<const double> prior_z,
                                  const LinearEstimand& estimand, double budget);

// Conservative (non-sharp) interval for a ratio of two estimands bounded
// separately. The denominator interval must be strictly positive.
struct RatioBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool sharp = false;
};
RatioBounds ratio_bounds(const IgnoranceRegion& numerator,
                         const IgnoranceRegion& denominator);

// Calibration anchor: max over k of the stratum-weighted L1 distance between
// P(A(k), A(-k) | s) and P(A(k) | s) P(A(-k) | s). `table` holds the causes
// and the stratum variables.
double benchmark_budget(const JointTable& table,
                        std::span<const std::string> causes,
                        std::span<const std::string> strata);
double benchmark_budget(const Dataset& causes, std::span<const int> zhat);
double benchmark_budget(const ScmSpec& scm, const ZhatFn& zhat_fn);

struct SensitivityReport {
  std::string source;  // "true_z" or "fitted_posterior"
  Levels a;
  LinearEstimand estimand;
  std::vector<double> margin_y;
  std::vector<double> margin_z;
  std::vector<double> prior_z;
  double naive = 0.0;            // estimand at P(Y | A = a)
  std::optional<double> truth;   // known only for structural input
  double benchmark = 0.0;
  std::vector<IgnoranceRegion> regions;  // one per budget, in input order
};

// Structural input: margins from the model's own P(Z | A = a) and P(Z); the
// benchmark uses zhat(a) = argmax_z P(z | A = a). Budgets may be +inf.
SensitivityReport sensitivity_report(const ScmSpec& scm, std::span<const int> a,
                                     const LinearEstimand& estimand,
                                     std::span<const double> budgets);

// Sample input: empirical P(Y | A = a), posterior-implied P(Z | A = a) and
// prior pi from a fitted latent class model over the causes.
SensitivityReport sensitivity_report(const Dataset& data,
                                     std::span<const std::string> causes,
                                     const std::string& outcome,
                                     const LatentClassModel& model,
                                     std::span<const int> a,
                                     const LinearEstimand& estimand,
                                     std::span<const double> budgets);

}  // namespace mcause
