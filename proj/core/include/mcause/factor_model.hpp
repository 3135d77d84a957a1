#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcause/dataset.hpp"

namespace mcause {

// Latent class model P(Z) * prod_j P(V_j | Z) over indicator columns V_j.
// The first `n_causes` indicator columns are causes; any remaining columns are
// covariates.
struct LatentClassModel {
  int n_classes = 1;
  std::vector<double> pi;
  std::vector<VarSpec> columns;
  std::size_t n_causes = 0;
  // theta[j][z][level] = P(V_j = level | Z = z).
  std::vector<std::vector<std::vector<double>>> theta;

  void validate() const;
  std::size_t free_parameters() const;
  // log P(row, Z = z); `row` holds either every column or only the causes
  // (covariates are then marginalized out).
  double log_joint(std::span<const int> row, int z) const;
};

struct FitOptions {
  int n_classes = 2;
  int restarts = 10;
  double tol = 1e-8;
  int max_iter = 2000;
  double theta_floor = 1e-12;
  std::uint64_t seed = 0;
};

struct FitReport {
  std::vector<double> loglik_trace;  // best restart
  std::vector<std::vector<double>> restart_traces;
  int n_restarts = 0;
  int best_restart_index = 0;
  bool converged = false;
  double final_loglik = 0.0;
  double theta_floor = 0.0;
};

struct FitResult {
  LatentClassModel model;
  FitReport report;
};

// EM for the latent class likelihood prod_i sum_z pi_z prod_j theta_j(v_ij | z).
// Each restart initializes from Dirichlet(1) responsibilities per row; the
// best restart by final log-likelihood wins (lowest index on ties).
// `n_causes` defaults to every column of `data`.
FitResult em_fit(const Dataset& data, const FitOptions& options,
                 std::size_t n_causes = static_cast<std::size_t>(-1));

double log_likelihood(const LatentClassModel& model, const Dataset& data);

// Bayes posterior over classes for one row. Throws ZeroLikelihoodRow when
// every class assigns the row probability zero.
std::vector<double> posterior_z(const LatentClassModel& model,
                                std::span<const int> row);

// MAP class; ties go to the lowest class index.
int zhat(const LatentClassModel& model, std::span<const int> row);
std::vector<int> zhat_column(const LatentClassModel& model, const Dataset& data);

Dataset sample_from_model(const LatentClassModel& model, std::size_t n,
                          std::uint64_t seed);

using DatasetStatistic = std::function<double(const Dataset&)>;

// Fraction of `n_rep` datasets drawn from `model` (same size as `data`) whose
// statistic is at least the observed one.
double predictive_check(const LatentClassModel& model, const Dataset& data,
                        const DatasetStatistic& statistic, int n_rep,
                        std::uint64_t seed);

// Mean Pearson correlation over pairs of the first `n_causes` columns, using
// the integer codes. Pairs with a constant column contribute 0.
double mean_pairwise_correlation(const Dataset& data, std::size_t n_causes);

struct BicRow {
  int n_classes = 0;
  double loglik = 0.0;
  std::size_t n_params = 0;
  double bic = 0.0;
  bool converged = false;
};

std::vector<BicRow> bic_table(const Dataset& data, std::span<const int> classes,
                              const FitOptions& base,
                              std::size_t n_causes = static_cast<std::size_t>(-1));

}  // namespace mcause
