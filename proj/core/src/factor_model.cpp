#include "mcause/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mcause/error.hpp"
#include "mcause/random.hpp"

namespace mcause {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Distinct rows with multiplicities.
struct Patterns {
  std::vector<std::vector<int>> rows;
  std::vector<double> counts;
  std::vector<std::size_t> of_row;  // pattern index of each data row
};

Patterns compress(const Dataset& data) {
  std::map<std::vector<int>, std::size_t> index;
  Patterns p;
  p.of_row.resize(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    std::vector<int> key(row.begin(), row.end());
    auto [it, inserted] = index.emplace(key, p.rows.size());
    if (inserted) {
      p.rows.push_back(std::move(key));
      p.counts.push_back(0.0);
    }
    p.counts[it->second] += 1.0;
    p.of_row[r] = it->second;
  }
  return p;
}

// M-step from per-pattern responsibilities (already multiplied by counts).
void m_step(LatentClassModel& model, const Patterns& pats,
            const std::vector<std::vector<double>>& weighted, double floor) {
  const int L = model.n_classes;
  std::vector<double> class_mass(L, 0.0);
  for (const auto& w : weighted)
    for (int z = 0; z < L; ++z) class_mass[z] += w[z];
  double total = 0.0;
  for (double m : class_mass) total += m;
  for (int z = 0; z < L; ++z) model.pi[z] = class_mass[z] / total;

  for (std::size_t j = 0; j < model.columns.size(); ++j) {
    const int card = model.columns[j].card;
    for (int z = 0; z < L; ++z) std::fill(model.theta[j][z].begin(), model.theta[j][z].end(), 0.0);
    for (std::size_t p = 0; p < pats.rows.size(); ++p)
      for (int z = 0; z < L; ++z) model.theta[j][z][pats.rows[p][j]] += weighted[p][z];
    for (int z = 0; z < L; ++z) {
      auto& row = model.theta[j][z];
      if (!(class_mass[z] > 0.0)) {
        std::fill(row.begin(), row.end(), 1.0 / card);
        continue;
      }
      double s = 0.0;
      for (auto& v : row) {
        v = std::max(v / class_mass[z], floor);
        s += v;
      }
      for (auto& v : row) v /= s;
    }
  }
}

LatentClassModel empty_model(const Dataset& data, int L, std::size_t n_causes) {
  LatentClassModel m;
  m.n_classes = L;
  m.pi.assign(L, 1.0 / L);
  m.columns = data.columns();
  m.n_causes = n_causes;
  for (const auto& c : m.columns)
    m.theta.emplace_back(L, std::vector<double>(c.card, 1.0 / c.card));
  return m;
}

struct RestartResult {
  LatentClassModel model;
  std::vector<double> trace;
  bool converged = false;
};

RestartResult run_restart(const Dataset& data, const Patterns& pats,
                          const FitOptions& o, std::size_t n_causes, int r) {
  const int L = o.n_classes;
  RestartResult res{empty_model(data, L, n_causes), {}, false};
  std::vector<std::vector<double>> weighted(pats.rows.size(), std::vector<double>(L, 0.0));
  Rng rng(o.seed, 2, static_cast<std::uint64_t>(r));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto d = dirichlet(rng, static_cast<std::size_t>(L), 1.0);
    for (int z = 0; z < L; ++z) weighted[pats.of_row[i]][z] += d[z];
  }
  m_step(res.model, pats, weighted, o.theta_floor);

  std::vector<double> lj(L);
  for (int iter = 0; iter < o.max_iter; ++iter) {
    double ll = 0.0;
    for (std::size_t p = 0; p < pats.rows.size(); ++p) {
      for (int z = 0; z < L; ++z) lj[z] = res.model.log_joint(pats.rows[p], z);
      double lse = log_sum_exp(lj);
      ll += pats.counts[p] * lse;
      for (int z = 0; z < L; ++z)
        weighted[p][z] = pats.counts[p] * std::exp(lj[z] - lse);
    }
    if (!res.trace.empty() && ll - res.trace.back() < o.tol) {
      res.trace.push_back(ll);
      res.converged = true;
      break;
    }
    res.trace.push_back(ll);
    if (iter + 1 == o.max_iter) break;
    m_step(res.model, pats, weighted, o.theta_floor);
  }
  return res;
}

}  // namespace

void LatentClassModel::validate() const {
  if (n_classes < 1) throw InvalidInput("latent class model needs L >= 1");
  if (pi.size() != static_cast<std::size_t>(n_classes))
    throw InvalidInput("pi has the wrong length");
  if (n_causes > columns.size()) throw InvalidInput("n_causes exceeds columns");
  auto check = [](std::span<const double> p, const char* what) {
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw InvalidInput(std::string(what) + ": negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > kNormTolerance)
      throw InvalidInput(std::string(what) + ": does not sum to 1");
  };
  check(pi, "pi");
  if (theta.size() != columns.size()) throw InvalidInput("theta has the wrong length");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (theta[j].size() != pi.size()) throw InvalidInput("theta row count mismatch");
    for (const auto& row : theta[j]) {
      if (row.size() != static_cast<std::size_t>(columns[j].card))
        throw InvalidInput("theta row length mismatch for '" + columns[j].name + "'");
      check(row, "theta row");
    }
  }
}

std::size_t LatentClassModel::free_parameters() const {
  std::size_t per_class = 0;
  for (const auto& c : columns) per_class += static_cast<std::size_t>(c.card - 1);
  return static_cast<std::size_t>(n_classes - 1) +
         static_cast<std::size_t>(n_classes) * per_class;
}

double LatentClassModel::log_joint(std::span<const int> row, int z) const {
  if (row.size() != columns.size() && row.size() != n_causes)
    throw InvalidInput("row length matches neither the columns nor the causes");
  if (pi[z] <= 0.0) return kNegInf;
  double lp = std::log(pi[z]);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] < 0 || row[j] >= columns[j].card)
      throw InvalidInput("level out of range for '" + columns[j].name + "'");
    double t = theta[j][z][row[j]];
    if (t <= 0.0) return kNegInf;
    lp += std::log(t);
  }
  return lp;
}

FitResult em_fit(const Dataset& data, const FitOptions& o, std::size_t n_causes) {
  if (o.n_classes < 1) throw InvalidInput("number of classes must be >= 1");
  if (data.empty()) throw InvalidInput("cannot fit an empty dataset");
  if (o.restarts < 1 || o.max_iter < 1) throw InvalidInput("restarts and max_iter must be >= 1");
  if (n_causes > data.cols()) n_causes = data.cols();
  Patterns pats = compress(data);

  FitResult out;
  out.report.n_restarts = o.restarts;
  out.report.theta_floor = o.theta_floor;
  double best = kNegInf;
  for (int r = 0; r < o.restarts; ++r) {
    RestartResult res = run_restart(data, pats, o, n_causes, r);
    double fin = res.trace.back();
    out.report.restart_traces.push_back(res.trace);
    if (r == 0 || fin > best) {
      best = fin;
      out.model = std::move(res.model);
      out.report.best_restart_index = r;
      out.report.converged = res.converged;
      out.report.loglik_trace = res.trace;
    }
  }
  out.report.final_loglik = best;
  return out;
}

double log_likelihood(const LatentClassModel& model, const Dataset& data) {
  std::vector<double> lj(model.n_classes);
  double ll = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (int z = 0; z < model.n_classes; ++z) lj[z] = model.log_joint(data.row(r), z);
    ll += log_sum_exp(lj);
  }
  return ll;
}

std::vector<double> posterior_z(const LatentClassModel& model,
                                std::span<const int> row) {
  std::vector<double> lj(model.n_classes);
  for (int z = 0; z < model.n_classes; ++z) lj[z] = model.log_joint(row, z);
  double lse = log_sum_exp(lj);
  if (lse == kNegInf)
    throw ZeroLikelihoodRow("every latent class gives the row probability zero");
  std::vector<double> post(lj.size());
  for (std::size_t z = 0; z < lj.size(); ++z) post[z] = std::exp(lj[z] - lse);
  return post;
}

int zhat(const LatentClassModel& model, std::span<const int> row) {
  auto post = posterior_z(model, row);
  int best = 0;
  for (int z = 1; z < static_cast<int>(post.size()); ++z)
    if (post[z] > post[best]) best = z;
  return best;
}

std::vector<int> zhat_column(const LatentClassModel& model, const Dataset& data) {
  std::vector<int> out(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) out[r] = zhat(model, data.row(r));
  return out;
}

Dataset sample_from_model(const LatentClassModel& model, std::size_t n,
                          std::uint64_t seed) {
  model.validate();
  std::vector<int> values;
  values.reserve(n * model.columns.size());
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, 4, i);
    int z = rng.categorical(model.pi);
    for (std::size_t j = 0; j < model.columns.size(); ++j)
      values.push_back(rng.categorical(model.theta[j][z]));
  }
  return Dataset(model.columns, std::move(values));
}

double predictive_check(const LatentClassModel& model, const Dataset& data,
                        const DatasetStatistic& statistic, int n_rep,
                        std::uint64_t seed) {
  if (n_rep < 1) throw InvalidInput("predictive_check needs n_rep >= 1");
  const double observed = statistic(data);
  int exceed = 0;
  for (int rep = 0; rep < n_rep; ++rep) {
    Dataset synth = sample_from_model(
        model, data.rows(), mix_seed(seed, 5, static_cast<std::uint64_t>(rep)));
    if (statistic(synth) >= observed) ++exceed;
  }
  return static_cast<double>(exceed) / n_rep;
}

double mean_pairwise_correlation(const Dataset& data, std::size_t n_causes) {
  n_causes = std::min(n_causes, data.cols());
  if (n_causes < 2 || data.rows() < 2) return 0.0;
  const auto n = static_cast<double>(data.rows());
  std::vector<double> mean(n_causes, 0.0), sd(n_causes, 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t j = 0; j < n_causes; ++j) mean[j] += data(r, j);
  for (auto& m : mean) m /= n;
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t j = 0; j < n_causes; ++j) {
      double d = data(r, j) - mean[j];
      sd[j] += d * d;
    }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < n_causes; ++a) {
    for (std::size_t b = a + 1; b < n_causes; ++b, ++pairs) {
      if (sd[a] <= 0.0 || sd[b] <= 0.0) continue;
      double cov = 0.0;
      for (std::size_t r = 0; r < data.rows(); ++r)
        cov += (data(r, a) - mean[a]) * (data(r, b) - mean[b]);
      total += cov / std::sqrt(sd[a] * sd[b]);
    }
  }
  return total / static_cast<double>(pairs);
}

std::vector<BicRow> bic_table(const Dataset& data, std::span<const int> classes,
                              const FitOptions& base, std::size_t n_causes) {
  std::vector<BicRow> out;
  for (int L : classes) {
    FitOptions o = base;
    o.n_classes = L;
    auto fit = em_fit(data, o, n_causes);
    BicRow row;
    row.n_classes = L;
    row.loglik = fit.report.final_loglik;
    row.n_params = fit.model.free_parameters();
    row.bic = -2.0 * row.loglik +
              static_cast<double>(row.n_params) * std::log(static_cast<double>(data.rows()));
    row.converged = fit.report.converged;
    out.push_back(row);
  }
  return out;
}

}  // namespace mcause
