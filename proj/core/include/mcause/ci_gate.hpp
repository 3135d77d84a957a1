#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcause/dataset.hpp"
#include "mcause/scm.hpp"

namespace mcause {

struct CiTestOptions {
  int n_permutations = 999;
  std::uint64_t seed = 0;
  // Strata with fewer rows are left out of the statistic and reported.
  std::size_t min_stratum_rows = 5;
  // Up to this many causes the rest A(-k) is collapsed to one joint level;
  // beyond it the statistic sums pairwise G over (k, j).
  std::size_t max_collapsed_causes = 6;
};

struct CiTestResult {
  std::size_t cause = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
  std::vector<int> small_strata;  // excluded, fewer than min_stratum_rows rows
  bool pairwise_approximation = false;
};

// Permutation test of A(k) independent of A(-k) given the zhat strata, using
// the within-stratum G statistic summed over strata. Permutations shuffle
// A(k) inside each stratum; p = (1 + #{perm >= observed}) / (1 + B).
// Every column of `causes` is a cause.
CiTestResult mutual_ci_test(const Dataset& causes, std::span<const int> zhat,
                            std::size_t k, const CiTestOptions& options);

// Summed within-stratum G statistic for one assignment of the k-th column;
// exposed for tests and benchmarks.
double stratified_g_statistic(const Dataset& causes, std::span<const int> zhat,
                              std::size_t k, const CiTestOptions& options);

enum class GateDecision { kPass, kFail };

// Power note: the weakest injected dependence that the test rejects in at
// least `target_power` of the simulated trials at this sample size.
// Strength s means A(k) is overwritten, independently per row with
// probability s, by a copy of another cause (levels taken modulo |A(k)|).
struct PowerNote {
  std::size_t cause = 0;
  std::size_t source_cause = 0;
  std::size_t sample_size = 0;
  double min_detectable_strength = 0.0;  // +inf when nothing on the grid is detected
  double target_power = 0.8;
  int trials = 0;
  std::vector<std::pair<double, double>> curve;  // (strength, rejection rate)
};

struct GateOptions {
  double alpha = 0.05;
  bool bonferroni = false;
  int power_trials = 20;
  int power_permutations = 99;
  double target_power = 0.8;
  std::vector<double> strength_grid;  // empty = default grid
  std::uint64_t seed = 0;
};

struct GateReport {
  std::vector<double> per_cause_pvalues;
  double alpha = 0.05;
  double effective_alpha = 0.05;
  bool bonferroni = false;
  GateDecision decision = GateDecision::kFail;
  PowerNote power;
  int n_permutations = 0;
  std::vector<CiTestResult> tests;
};

std::vector<double> default_strength_grid();

// PASS iff every p-value exceeds the (optionally Bonferroni-corrected) alpha.
GateDecision decide(std::span<const double> p_values, double alpha,
                    bool bonferroni);

// Builds the report for completed per-cause tests and runs the power
// simulation on `causes` with the same strata.
GateReport gate_decision(std::span<const CiTestResult> tests,
                         const Dataset& causes, std::span<const int> zhat,
                         const GateOptions& options);

// Runs mutual_ci_test for every cause, then gate_decision.
GateReport run_gate(const Dataset& causes, std::span<const int> zhat,
                    const CiTestOptions& test_options,
                    const GateOptions& gate_options);

// zhat as a function of (cause levels, covariate level); x is 0 when the model
// has no covariate.
using ZhatFn = std::function<int(std::span<const int> a, int x)>;

struct SubstituteCheck {
  bool holds = true;
  double cause_gap = 0.0;  // max |P(a | s) - prod_k P(a_k | s)|
  double po_gap = 0.0;     // max |P(Y(a) | A = a', s) - P(Y(a) | s)|
  double tolerance = 1e-9;
};

// Exact population check of: causes mutually independent given zhat(A, X)
// implies A independent of Y(a) given zhat(A, X), for every a. `holds` is the
// implication evaluated on this instance. Throws DagViolation if X is not
// independent of A given Z.
SubstituteCheck verify_substitute_unconfoundedness(const ScmSpec& scm, const ZhatFn& zhat_fn,
                                   double tolerance = 1e-9);

}  // namespace mcause
