#include "mcause/ci_gate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mcause/error.hpp"
#include "mcause/random.hpp"

namespace mcause {
namespace {

// One stratum's view of the data for cause k: the A(k) column and, per
// "partner", a compact level index for the conditioning side.
struct Stratum {
  int label = 0;
  std::vector<int> target;                 // A(k) per row
  std::vector<std::vector<int>> partners;  // one or more partner columns
  std::vector<int> partner_cards;
};

struct Layout {
  std::vector<Stratum> strata;
  std::vector<int> small;
  bool pairwise = false;
  int target_card = 1;
};

Layout build_layout(const Dataset& causes, std::span<const int> zhat,
                    std::size_t k, const CiTestOptions& o) {
  const std::size_t m = causes.cols();
  if (k >= m) throw InvalidInput("cause index out of range");
  if (zhat.size() != causes.rows())
    throw InvalidInput("zhat column length differs from the data");
  Layout lay;
  lay.pairwise = m > o.max_collapsed_causes;
  lay.target_card = causes.columns()[k].card;

  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t r = 0; r < causes.rows(); ++r) rows_of[zhat[r]].push_back(r);

  for (const auto& [label, rows] : rows_of) {
    if (rows.size() < o.min_stratum_rows) {
      lay.small.push_back(label);
      continue;
    }
    Stratum s;
    s.label = label;
    for (std::size_t r : rows) s.target.push_back(causes(r, k));
    if (lay.pairwise) {
      for (std::size_t j = 0; j < m; ++j) {
        if (j == k) continue;
        std::vector<int> col;
        for (std::size_t r : rows) col.push_back(causes(r, j));
        s.partners.push_back(std::move(col));
        s.partner_cards.push_back(causes.columns()[j].card);
      }
    } else {
      // Collapse A(-k) to a compact joint index within the stratum.
      std::map<std::vector<int>, int> code;
      std::vector<int> col;
      for (std::size_t r : rows) {
        std::vector<int> key;
        for (std::size_t j = 0; j < m; ++j)
          if (j != k) key.push_back(causes(r, j));
        auto [it, ins] = code.emplace(std::move(key), static_cast<int>(code.size()));
        col.push_back(it->second);
      }
      s.partners.push_back(std::move(col));
      s.partner_cards.push_back(std::max<int>(1, static_cast<int>(code.size())));
    }
    lay.strata.push_back(std::move(s));
  }
  return lay;
}

double g_of(std::span<const int> target, int target_card,
            std::span<const int> partner, int partner_card,
            std::vector<double>& counts) {
  const auto tc = static_cast<std::size_t>(target_card);
  const auto pc = static_cast<std::size_t>(partner_card);
  counts.assign(tc * pc, 0.0);
  for (std::size_t i = 0; i < target.size(); ++i)
    counts[static_cast<std::size_t>(target[i]) * pc + static_cast<std::size_t>(partner[i])] += 1.0;
  std::vector<double> row(tc, 0.0), col(pc, 0.0);
  for (std::size_t a = 0; a < tc; ++a)
    for (std::size_t b = 0; b < pc; ++b) {
      row[a] += counts[a * pc + b];
      col[b] += counts[a * pc + b];
    }
  const auto n = static_cast<double>(target.size());
  double g = 0.0;
  for (std::size_t a = 0; a < tc; ++a)
    for (std::size_t b = 0; b < pc; ++b) {
      double o = counts[a * pc + b];
      if (o > 0.0) g += o * std::log(o * n / (row[a] * col[b]));
    }
  return 2.0 * g;
}

double layout_statistic(const Layout& lay, std::vector<double>& scratch) {
  double g = 0.0;
  for (const auto& s : lay.strata)
    for (std::size_t p = 0; p < s.partners.size(); ++p)
      g += g_of(s.target, lay.target_card, s.partners[p], s.partner_cards[p], scratch);
  return g;
}

}  // namespace

double stratified_g_statistic(const Dataset& causes, std::span<const int> zhat,
                              std::size_t k, const CiTestOptions& options) {
  Layout lay = build_layout(causes, zhat, k, options);
  std::vector<double> scratch;
  return layout_statistic(lay, scratch);
}

CiTestResult mutual_ci_test(const Dataset& causes, std::span<const int> zhat,
                            std::size_t k, const CiTestOptions& o) {
  if (o.n_permutations < 99)
    throw InvalidInput("mutual_ci_test needs at least 99 permutations");
  Layout lay = build_layout(causes, zhat, k, o);
  std::vector<double> scratch;
  CiTestResult res;
  res.cause = k;
  res.n_permutations = o.n_permutations;
  res.small_strata = lay.small;
  res.pairwise_approximation = lay.pairwise;
  res.statistic = layout_statistic(lay, scratch);

  const double threshold =
      res.statistic - 1e-10 * std::max(1.0, std::abs(res.statistic));
  int exceed = 0;
  Layout perm = lay;
  for (int b = 0; b < o.n_permutations; ++b) {
    Rng rng(o.seed, 6, static_cast<std::uint64_t>(b));
    for (std::size_t s = 0; s < perm.strata.size(); ++s) {
      auto& t = perm.strata[s].target;
      std::copy(lay.strata[s].target.begin(), lay.strata[s].target.end(), t.begin());
      shuffle(std::span<int>(t), rng);
    }
    if (layout_statistic(perm, scratch) >= threshold) ++exceed;
  }
  res.p_value = (1.0 + exceed) / (1.0 + o.n_permutations);
  return res;
}

std::vector<double> default_strength_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 25; ++i) g.push_back(0.02 * i);
  for (int i = 6; i <= 10; ++i) g.push_back(0.1 * i);
  return g;
}

GateDecision decide(std::span<const double> p_values, double alpha,
                    bool bonferroni) {
  double eff = bonferroni && !p_values.empty()
                   ? alpha / static_cast<double>(p_values.size())
                   : alpha;
  for (double p : p_values)
    if (!(p > eff)) return GateDecision::kFail;
  return GateDecision::kPass;
}

namespace {

PowerNote simulate_power(const Dataset& causes, std::span<const int> zhat,
                         double eff_alpha, const GateOptions& o) {
  PowerNote note;
  note.sample_size = causes.rows();
  note.target_power = o.target_power;
  note.trials = o.power_trials;
  note.min_detectable_strength = std::numeric_limits<double>::infinity();
  const std::size_t m = causes.cols();
  if (m < 2 || causes.empty()) return note;
  note.cause = 0;
  note.source_cause = 1;
  const int card_k = causes.columns()[0].card;

  // Row indices per stratum, used to build within-stratum null copies.
  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t r = 0; r < causes.rows(); ++r) rows_of[zhat[r]].push_back(r);

  CiTestOptions test_opts;
  test_opts.n_permutations = std::max(99, o.power_permutations);
  auto grid = o.strength_grid.empty() ? default_strength_grid() : o.strength_grid;
  std::sort(grid.begin(), grid.end());

  std::vector<int> base(causes.values().begin(), causes.values().end());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double s = grid[gi];
    int rejected = 0;
    for (int t = 0; t < o.power_trials; ++t) {
      Rng rng(o.seed, 7, gi * 100003ULL + static_cast<std::uint64_t>(t));
      std::vector<int> vals = base;
      // Null copy: shuffle A(0) within strata.
      for (const auto& [label, rows] : rows_of) {
        std::vector<int> col;
        for (std::size_t r : rows) col.push_back(vals[r * m]);
        shuffle(std::span<int>(col), rng);
        for (std::size_t i = 0; i < rows.size(); ++i) vals[rows[i] * m] = col[i];
      }
      for (std::size_t r = 0; r < causes.rows(); ++r)
        if (rng.uniform() < s) vals[r * m] = vals[r * m + 1] % card_k;
      Dataset copy(causes.columns(), std::move(vals));
      test_opts.seed = mix_seed(o.seed, 8, gi * 100003ULL + static_cast<std::uint64_t>(t));
      auto res = mutual_ci_test(copy, zhat, 0, test_opts);
      if (res.p_value <= eff_alpha) ++rejected;
    }
    double rate = static_cast<double>(rejected) / o.power_trials;
    note.curve.emplace_back(s, rate);
    if (rate >= o.target_power) {
      note.min_detectable_strength = s;
      break;
    }
  }
  return note;
}

}  // namespace

GateReport gate_decision(std::span<const CiTestResult> tests,
                         const Dataset& causes, std::span<const int> zhat,
                         const GateOptions& o) {
  if (tests.size() != causes.cols())
    throw InvalidInput("gate_decision needs one completed test per cause");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  GateReport rep;
  rep.alpha = o.alpha;
  rep.bonferroni = o.bonferroni;
  rep.effective_alpha =
      o.bonferroni ? o.alpha / static_cast<double>(tests.size()) : o.alpha;
  rep.tests.assign(tests.begin(), tests.end());
  for (const auto& t : tests) {
    rep.per_cause_pvalues.push_back(t.p_value);
    rep.n_permutations = std::max(rep.n_permutations, t.n_permutations);
  }
  rep.decision = decide(rep.per_cause_pvalues, o.alpha, o.bonferroni);
  rep.power = simulate_power(causes, zhat, rep.effective_alpha, o);
  return rep;
}

GateReport run_gate(const Dataset& causes, std::span<const int> zhat,
                    const CiTestOptions& test_options,
                    const GateOptions& gate_options) {
  std::vector<CiTestResult> tests;
  for (std::size_t k = 0; k < causes.cols(); ++k) {
    CiTestOptions o = test_options;
    o.seed = mix_seed(test_options.seed, 9, k);
    tests.push_back(mutual_ci_test(causes, zhat, k, o));
  }
  return gate_decision(tests, causes, zhat, gate_options);
}

SubstituteCheck verify_substitute_unconfoundedness(const ScmSpec& scm,
                                                   const ZhatFn& zhat_fn,
                                                   double tolerance) {
  scm.validate();
  const std::size_t m = scm.causes.size();
  const int nx = scm.x ? scm.x->card : 1;
  const int nz = scm.z.card;
  const int ny = scm.y.card;
  auto assignments = all_assignments(scm.causes);
  const std::size_t na = assignments.size();

  // P(a, x, z) and the stratum of every (a, x).
  std::vector<double> axz(na * static_cast<std::size_t>(nx * nz), 0.0);
  std::vector<int> stratum(na * static_cast<std::size_t>(nx));
  auto at = [&](std::size_t ia, int x, int z) -> double& {
    return axz[(ia * static_cast<std::size_t>(nx) + static_cast<std::size_t>(x)) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)];
  };
  int n_strata = 0;
  for (std::size_t ia = 0; ia < na; ++ia) {
    for (int x = 0; x < nx; ++x) {
      int s = zhat_fn(assignments[ia], x);
      if (s < 0) throw InvalidInput("zhat must return a non-negative class");
      stratum[ia * static_cast<std::size_t>(nx) + static_cast<std::size_t>(x)] = s;
      n_strata = std::max(n_strata, s + 1);
      for (int z = 0; z < nz; ++z) {
        double p = scm.p_z[z];
        for (std::size_t k = 0; k < m; ++k)
          p *= scm.p_a_given_z[k].row(static_cast<std::size_t>(z))[assignments[ia][k]];
        if (scm.x) p *= scm.p_x_given_z->row(static_cast<std::size_t>(z))[x];
        at(ia, x, z) = p;
      }
    }
  }

  // X independent of A given Z.
  if (scm.x) {
    double worst = 0.0;
    for (int z = 0; z < nz; ++z) {
      if (scm.p_z[z] <= 0.0) continue;
      std::vector<double> pa(na, 0.0), px(static_cast<std::size_t>(nx), 0.0);
      for (std::size_t ia = 0; ia < na; ++ia)
        for (int x = 0; x < nx; ++x) {
          pa[ia] += at(ia, x, z) / scm.p_z[z];
          px[x] += at(ia, x, z) / scm.p_z[z];
        }
      for (std::size_t ia = 0; ia < na; ++ia)
        for (int x = 0; x < nx; ++x)
          worst = std::max(worst, std::abs(at(ia, x, z) / scm.p_z[z] - pa[ia] * px[x]));
    }
    if (worst > tolerance) throw DagViolation("X is not independent of A given Z");
  }

  // P(a, s, z) collapsing x.
  const auto S = static_cast<std::size_t>(n_strata);
  std::vector<double> asz(na * S * static_cast<std::size_t>(nz), 0.0);
  for (std::size_t ia = 0; ia < na; ++ia)
    for (int x = 0; x < nx; ++x) {
      auto s = static_cast<std::size_t>(stratum[ia * static_cast<std::size_t>(nx) + static_cast<std::size_t>(x)]);
      for (int z = 0; z < nz; ++z)
        asz[(ia * S + s) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)] += at(ia, x, z);
    }

  SubstituteCheck out;
  out.tolerance = tolerance;
  std::vector<double> p_as(na * S, 0.0), p_s(S, 0.0), p_sz(S * static_cast<std::size_t>(nz), 0.0);
  for (std::size_t ia = 0; ia < na; ++ia)
    for (std::size_t s = 0; s < S; ++s)
      for (int z = 0; z < nz; ++z) {
        double v = asz[(ia * S + s) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)];
        p_as[ia * S + s] += v;
        p_s[s] += v;
        p_sz[s * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)] += v;
      }

  for (std::size_t s = 0; s < S; ++s) {
    if (p_s[s] <= 0.0) continue;
    std::vector<std::vector<double>> marg(m);
    for (std::size_t k = 0; k < m; ++k) marg[k].assign(scm.causes[k].card, 0.0);
    for (std::size_t ia = 0; ia < na; ++ia)
      for (std::size_t k = 0; k < m; ++k)
        marg[k][assignments[ia][k]] += p_as[ia * S + s] / p_s[s];
    for (std::size_t ia = 0; ia < na; ++ia) {
      double prod = 1.0;
      for (std::size_t k = 0; k < m; ++k) prod *= marg[k][assignments[ia][k]];
      out.cause_gap = std::max(out.cause_gap, std::abs(p_as[ia * S + s] / p_s[s] - prod));
    }
  }

  // Y(a) depends on Z only, so P(Y(a) | event) = sum_z P(z | event) P(Y | a, z).
  Levels parents(m + 1);
  for (std::size_t ia = 0; ia < na; ++ia) {
    std::copy(assignments[ia].begin(), assignments[ia].end(), parents.begin());
    std::vector<std::vector<double>> outcome(static_cast<std::size_t>(nz));
    for (int z = 0; z < nz; ++z) {
      parents[m] = z;
      auto row = scm.p_y_given_az.row(parents);
      outcome[z].assign(row.begin(), row.end());
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (p_s[s] <= 0.0) continue;
      std::vector<double> marginal(static_cast<std::size_t>(ny), 0.0);
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          marginal[y] += p_sz[s * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)] / p_s[s] * outcome[z][y];
      for (std::size_t ib = 0; ib < na; ++ib) {
        double pbs = p_as[ib * S + s];
        if (pbs <= 0.0) continue;
        for (int y = 0; y < ny; ++y) {
          double cond = 0.0;
          for (int z = 0; z < nz; ++z)
            cond += asz[(ib * S + s) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(z)] / pbs * outcome[z][y];
          out.po_gap = std::max(out.po_gap, std::abs(cond - marginal[y]));
        }
      }
    }
  }
  out.holds = !(out.cause_gap <= tolerance) || out.po_gap <= tolerance;
  return out;
}

}  // namespace mcause
