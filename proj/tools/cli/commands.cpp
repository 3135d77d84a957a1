#include "cli/commands.hpp"
#include "cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mcause/ci_gate.hpp"
#include "mcause/dataset.hpp"
#include "mcause/error.hpp"
#include "mcause/factor_model.hpp"
#include "mcause/identify.hpp"
#include "mcause/scm.hpp"
#include "mcause/sensitivity.hpp"
#include "mcause/serialization.hpp"

#ifndef MCAUSE_VERSION
#define MCAUSE_VERSION "0.0.0"
#endif

namespace mcause::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- file I/O

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Outputs wrap their payload under a key next to the run header; inputs may
// be either the wrapped file or the bare payload.
Json unwrap(const Json& j, const char* key) {
  if (j.is_object() && j.contains(key)) return j.at(key);
  return j;
}

Dataset read_data_file(const std::string& path, std::span<const VarSpec> declared = {}) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in, declared);
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

class Output {
 public:
  Output(const Json& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    dir_ = cfg.at("out_dir").get<std::string>();
    fs::create_directories(dir_);
  }

  Json header() const {
    return {{"command", command_},
            {"version", MCAUSE_VERSION},
            {"seed", cfg_.at("seed")},
            {"config", cfg_}};
  }

  // Writes header + payload as JSON.
  void json(const std::string& name, const Json& payload) {
    Json doc = header();
    for (auto it = payload.begin(); it != payload.end(); ++it) doc[it.key()] = it.value();
    write_atomic(dir_ / name, dump_json(doc));
    files_.push_back((dir_ / name).generic_string());
  }
  void text(const std::string& name, const std::string& body) {
    write_atomic(dir_ / name, body);
    files_.push_back((dir_ / name).generic_string());
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  const Json& cfg_;
  std::string command_;
  fs::path dir_;
  std::vector<std::string> files_;
};

// Prints the run summary: JSON, or the command's CSV table with --format csv.
void emit(const Json& cfg, Streams io, const Json& summary, const std::string& csv) {
  if (cfg.at("format") == "csv")
    io.out << csv;
  else
    io.out << dump_json(summary);
}

// ---------------------------------------------------------------- config helpers

std::uint64_t seed_of(const Json& cfg) { return cfg.at("seed").get<std::uint64_t>(); }

std::vector<std::string> strings(const Json& v) {
  return v.is_null() ? std::vector<std::string>{} : v.get<std::vector<std::string>>();
}

std::vector<int> ints(const Json& v) {
  return v.is_null() ? std::vector<int>{} : v.get<std::vector<int>>();
}

std::vector<double> doubles(const Json& v) {
  std::vector<double> out;
  for (const auto& e : v) out.push_back(number_or_inf(e));
  return out;
}

bool has(const Json& cfg, const char* key) { return !cfg.at(key).is_null(); }

std::string str(const Json& cfg, const char* key) {
  if (!has(cfg, key)) throw InvalidInput(std::string("missing required --") + flag_name(key));
  return cfg.at(key).get<std::string>();
}

// "0,1,1;1,0,0" -> two assignments.
std::vector<Levels> parse_assignments(const std::string& text) {
  std::vector<Levels> out;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ';')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_value(part, Kind::kInts, "a").get<Levels>());
  }
  return out;
}

std::size_t position(std::span<const std::string> names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw UnknownVariable(name);
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<std::string> concat(std::vector<std::string> a, std::span<const std::string> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Columns of `all` except the listed ones, in order.
std::vector<std::string> remaining(const std::vector<std::string>& all,
                                   std::initializer_list<std::span<const std::string>> drop) {
  std::vector<std::string> out;
  for (const auto& n : all) {
    bool skip = false;
    for (auto d : drop) skip = skip || std::find(d.begin(), d.end(), n) != d.end();
    if (!skip) out.push_back(n);
  }
  return out;
}

void check_length(const Levels& a, std::size_t n, const char* what) {
  if (a.size() != n)
    throw InvalidInput(std::string(what) + " has " + std::to_string(a.size()) +
                       " levels, expected " + std::to_string(n));
}

ScmSpec load_scm(const std::string& path) { return scm_from_json(unwrap(read_json_file(path), "scm")); }

LatentClassModel load_model(const std::string& path) {
  return model_from_json(unwrap(read_json_file(path), "model"));
}

std::vector<std::string> model_cause_names(const LatentClassModel& m) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < m.n_causes; ++j) out.push_back(m.columns[j].name);
  return out;
}

std::vector<std::string> model_column_names(const LatentClassModel& m) {
  std::vector<std::string> out;
  for (const auto& c : m.columns) out.push_back(c.name);
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

std::string csv_string(const Dataset& d) {
  std::ostringstream s;
  write_csv(s, d);
  return s.str();
}

// ---------------------------------------------------------------- parameters

std::vector<Param> with_common(std::vector<Param> params) {
  params.insert(params.begin(),
                {{"seed", Kind::kUInt, 0, "master seed; every random stream is derived from it"},
                 {"out_dir", Kind::kString, ".", "directory for output files"},
                 {"format", Kind::kString, "json", "stdout summary format: json or csv"}});
  return params;
}

const Json kNone = nullptr;

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Json& cfg, Streams io) {
  const auto seed = seed_of(cfg);
  ScmSpec scm;
  if (has(cfg, "scm")) {
    scm = load_scm(str(cfg, "scm"));
  } else {
    const auto tmpl = str(cfg, "template");
    if (tmpl == "demo") {
      scm = demo_template();
    } else if (tmpl == "random") {
      RandomScmOptions o;
      o.z_card = cfg.at("z_card").get<int>();
      o.n_causes = cfg.at("causes").get<int>();
      o.cause_card = cfg.at("cause_card").get<int>();
      o.y_card = cfg.at("y_card").get<int>();
      o.x_card = cfg.at("x_card").get<int>();
      o.concentration = number_or_inf(cfg.at("concentration"));
      scm = random_scm(o, seed);
    } else {
      throw InvalidInput("--template must be 'random' or 'demo'");
    }
  }

  std::vector<Levels> assignments =
      has(cfg, "a") ? parse_assignments(str(cfg, "a")) : all_assignments(scm.causes);
  Json po = Json::array();
  for (const auto& a : assignments) {
    check_length(a, scm.causes.size(), "--a");
    po.push_back(to_json(ground_truth_po(scm, a)));
  }

  const auto n = cfg.at("n").get<std::size_t>();
  auto s = sample(scm, n, seed);

  Output out(cfg, "simulate");
  out.text("data.csv", csv_string(s.observed));
  out.text("hidden_z.csv", csv_string(Dataset({scm.z}, s.hidden_z)));
  out.json("scm.json", {{"scm", to_json(scm)}});
  out.json("observed_joint.json", {{"joint", to_json(observed_joint(scm))}});
  out.json("ground_truth.json", {{"potential_outcomes", po}});

  std::ostringstream csv;
  csv << "a";
  for (int y = 0; y < scm.y.card; ++y) csv << ",p_y" << y;
  csv << "\n";
  for (const auto& row : po) {
    std::string a;
    for (int v : row.at("a")) a += std::to_string(v);
    csv << a;
    for (const auto& p : row.at("dist")) csv << ',' << format_double(p.get<double>());
    csv << "\n";
  }
  emit(cfg, io,
       {{"command", "simulate"}, {"rows", n}, {"observed", s.observed.names()}, {"files", out.files()}},
       csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const Json& cfg, Streams io) {
  Dataset data = read_data_file(str(cfg, "data"));
  const auto outcome = str(cfg, "outcome");
  const auto covariates = strings(cfg.at("covariates"));
  const std::vector<std::string> outcome_only{outcome};
  auto causes = has(cfg, "causes") ? strings(cfg.at("causes"))
                                   : remaining(data.names(), {outcome_only, covariates});
  if (causes.empty()) throw InvalidInput("no cause columns to fit");
  Dataset indicators = data.select(concat(causes, covariates));

  FitOptions o;
  o.n_classes = cfg.at("classes").get<int>();
  o.restarts = cfg.at("restarts").get<int>();
  o.tol = number_or_inf(cfg.at("tol"));
  o.max_iter = cfg.at("max_iter").get<int>();
  o.theta_floor = number_or_inf(cfg.at("theta_floor"));
  o.seed = seed_of(cfg);

  auto fit = em_fit(indicators, o, causes.size());
  const auto bic_classes = ints(cfg.at("bic_classes"));
  auto bic = bic_table(indicators, bic_classes, o, causes.size());
  auto zh = zhat_column(fit.model, indicators);

  double worst_drop = 0.0;
  for (const auto& trace : fit.report.restart_traces)
    for (std::size_t i = 1; i < trace.size(); ++i) worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
  if (!fit.report.converged)
    io.err << "warning: EM stopped at max_iter=" << o.max_iter << " without converging\n";

  Json bic_rows = Json::array();
  std::ostringstream csv;
  csv << "classes,loglik,n_params,bic,converged\n";
  for (const auto& r : bic) {
    bic_rows.push_back(to_json(r));
    csv << r.n_classes << ',' << format_double(r.loglik) << ',' << r.n_params << ','
        << format_double(r.bic) << ',' << (r.converged ? "true" : "false") << "\n";
  }

  Output out(cfg, "fit");
  out.json("model.json", {{"model", to_json(fit.model)}});
  out.json("fit_report.json", {{"report", to_json(fit.report)},
                               {"n_rows", indicators.rows()},
                               {"causes", causes},
                               {"covariates", covariates},
                               {"max_loglik_decrease", worst_drop}});
  out.json("bic.json", {{"table", bic_rows}});
  out.text("bic.csv", csv.str());
  out.text("zhat.csv", csv_string(Dataset({VarSpec{"zhat", fit.model.n_classes}}, zh)));

  emit(cfg, io,
       {{"command", "fit"},
        {"loglik", fit.report.final_loglik},
        {"converged", fit.report.converged},
        {"best_restart", fit.report.best_restart_index},
        {"bic", bic_rows},
        {"files", out.files()}},
       csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------- gate

// Stratum labels: MAP classes of a fitted model, or a precomputed zhat column.
std::vector<int> load_strata(const Json& cfg, const Dataset& data, const LatentClassModel* model) {
  if (model) return zhat_column(*model, data.select(model_column_names(*model)));
  if (!has(cfg, "zhat")) throw InvalidInput("gate needs --model or --zhat");
  Dataset z = read_data_file(str(cfg, "zhat"));
  if (z.rows() != data.rows())
    throw InvalidInput("zhat file has " + std::to_string(z.rows()) + " rows, data has " +
                       std::to_string(data.rows()));
  auto col = z.find("zhat");
  if (!col && z.cols() != 1) throw InvalidInput("zhat file needs a 'zhat' column");
  return z.column(z.columns()[col.value_or(0)].name);
}

int cmd_gate(const Json& cfg, Streams io) {
  std::optional<LatentClassModel> model;
  if (has(cfg, "model")) model = load_model(str(cfg, "model"));
  Dataset data = read_data_file(str(cfg, "data"),
                                model ? std::span<const VarSpec>(model->columns) : std::span<const VarSpec>{});
  const auto outcome = str(cfg, "outcome");
  const auto covariates = strings(cfg.at("covariates"));
  const std::vector<std::string> outcome_only{outcome};
  std::vector<std::string> causes;
  if (has(cfg, "causes"))
    causes = strings(cfg.at("causes"));
  else if (model)
    causes = model_cause_names(*model);
  else
    causes = remaining(data.names(), {outcome_only, covariates});
  if (causes.size() < 2) throw InvalidInput("the gate needs at least two causes");

  auto strata = load_strata(cfg, data, model ? &*model : nullptr);

  CiTestOptions t;
  t.n_permutations = cfg.at("permutations").get<int>();
  t.seed = seed_of(cfg);
  t.min_stratum_rows = cfg.at("min_stratum_rows").get<std::size_t>();
  t.max_collapsed_causes = cfg.at("max_collapsed_causes").get<std::size_t>();
  GateOptions g;
  g.alpha = number_or_inf(cfg.at("alpha"));
  g.bonferroni = cfg.at("bonferroni").get<bool>();
  g.power_trials = cfg.at("power_trials").get<int>();
  g.power_permutations = cfg.at("power_permutations").get<int>();
  g.target_power = number_or_inf(cfg.at("target_power"));
  g.seed = seed_of(cfg);
  if (!(g.alpha > 0.0 && g.alpha < 1.0)) throw InvalidInput("--alpha must lie in (0, 1)");

  auto report = run_gate(data.select(causes), strata, t, g);

  Output out(cfg, "gate");
  out.json("gate_report.json", {{"causes", causes}, {"report", to_json(report)}});

  std::ostringstream csv;
  csv << "cause,statistic,p_value,small_strata\n";
  for (const auto& r : report.tests)
    csv << causes[r.cause] << ',' << format_double(r.statistic) << ',' << format_double(r.p_value)
        << ',' << r.small_strata.size() << "\n";
  emit(cfg, io,
       {{"command", "gate"},
        {"decision", to_string(report.decision)},
        {"effective_alpha", report.effective_alpha},
        {"per_cause_pvalues", report.per_cause_pvalues},
        {"min_detectable_strength", number_or_inf(report.power.min_detectable_strength)},
        {"files", out.files()}},
       csv.str());
  if (report.decision == GateDecision::kFail) {
    io.err << "gate FAIL: causes are not conditionally independent given the substitute confounder\n";
    return kExitGateFail;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- identify

struct Sources {
  std::string kind;
  std::optional<ScmSpec> scm;
  std::optional<JointTable> table;  // full (adjust) or observed (others)
  std::vector<std::string> causes;
};

Sources load_sources(const Json& cfg, bool with_latent) {
  const auto source = str(cfg, "source");
  const auto outcome = str(cfg, "outcome");
  const auto latent = str(cfg, "latent");
  const auto covariates = strings(cfg.at("covariates"));
  const std::vector<std::string> fixed{outcome, latent};
  Sources s;
  s.kind = source;
  if (source == "scm") {
    s.scm = load_scm(str(cfg, "scm"));
    s.causes = s.scm->cause_names();
    s.table = with_latent ? structural_joint(*s.scm) : observed_joint(*s.scm);
  } else if (source == "joint") {
    s.table = joint_table_from_json(unwrap(read_json_file(str(cfg, "joint")), "joint"));
    s.causes = remaining(s.table->names(), {fixed, covariates});
  } else if (source == "data") {
    Dataset data = read_data_file(str(cfg, "data"));
    if (has(cfg, "latent_data")) {
      Dataset z = read_data_file(str(cfg, "latent_data"));
      if (z.rows() != data.rows()) throw InvalidInput("latent data and data differ in row count");
      for (std::size_t c = 0; c < z.cols(); ++c)
        data = data.with_column(z.columns()[c], z.column(z.columns()[c].name));
    }
    s.causes = remaining(data.names(), {fixed, covariates});
    std::vector<std::string> keep = s.causes;
    keep.push_back(outcome);
    if (with_latent) keep.push_back(latent);
    s.table = empirical_table(data, keep);
  } else {
    throw InvalidInput("--source must be scm, joint or data");
  }
  if (has(cfg, "causes")) s.causes = strings(cfg.at("causes"));
  std::vector<std::string> keep = s.causes;
  keep.push_back(outcome);
  if (with_latent) keep.push_back(latent);
  s.table = marginalize(*s.table, keep);
  return s;
}

CauseZhatFn cause_zhat(const Json& cfg, const std::vector<std::string>& causes,
                       const JointTable& observed, Json& described) {
  if (has(cfg, "model")) {
    auto model = std::make_shared<LatentClassModel>(load_model(str(cfg, "model")));
    if (model->n_causes != causes.size())
      throw InvalidInput("model has " + std::to_string(model->n_causes) + " causes, query has " +
                         std::to_string(causes.size()));
    described = {{"kind", "model_map"}, {"model", str(cfg, "model")}};
    return [model](std::span<const int> a) { return zhat(*model, a); };
  }
  if (has(cfg, "zhat_causes")) {
    std::vector<std::size_t> idx;
    std::vector<int> cards;
    for (const auto& name : strings(cfg.at("zhat_causes"))) {
      idx.push_back(position(causes, name));
      cards.push_back(observed.var(name).card);
    }
    described = {{"kind", "joint_level_of"}, {"causes", cfg.at("zhat_causes")}};
    return [idx, cards](std::span<const int> a) {
      int code = 0;
      for (std::size_t i = 0; i < idx.size(); ++i) code = code * cards[i] + a[idx[i]];
      return code;
    };
  }
  throw InvalidInput("counterfactual needs --model or --zhat-causes");
}

Json refusal_json(const IdentificationRefusal& e) {
  if (const auto* ov = dynamic_cast<const OverlapViolation*>(&e))
    return {{"type", "OverlapViolation"}, {"message", e.what()}, {"strata", ov->strata()}};
  if (const auto* zm = dynamic_cast<const ZhatMismatch*>(&e))
    return {{"type", "ZhatMismatch"},
            {"message", e.what()},
            {"zhat_a", zm->zhat_a()},
            {"zhat_a_prime", zm->zhat_a_prime()}};
  return {{"type", "IdentificationRefusal"}, {"message", e.what()}};
}

int cmd_identify(const Json& cfg, Streams io) {
  auto estimand = str(cfg, "estimand");
  if (estimand == "thm7") estimand = "focal";
  if (estimand == "thm8") estimand = "counterfactual";
  if (estimand != "adjust" && estimand != "focal" && estimand != "counterfactual")
    throw InvalidInput("--estimand must be adjust, focal or counterfactual");

  const auto outcome = str(cfg, "outcome");
  const auto latent = str(cfg, "latent");
  Sources src = load_sources(cfg, estimand == "adjust");
  const auto& causes = src.causes;
  const JointTable& table = *src.table;
  const Levels a = ints(cfg.at("a"));

  Json inputs = {{"source", src.kind}, {"causes", causes}, {"outcome", outcome}, {"a", a}};
  Json distribution = nullptr;
  Json overlap = nullptr;
  Json reference = nullptr;
  Json refusal = nullptr;

  try {
    if (estimand == "adjust") {
      check_length(a, causes.size(), "--a");
      const std::vector<std::string> conf{latent};
      inputs["confounders"] = conf;
      overlap = to_json(confounder_overlap(table, causes, conf));
      distribution = adjust(table, causes, outcome, conf, a).dist;
      if (src.scm) reference = ground_truth_po(*src.scm, a).dist;
    } else if (estimand == "focal") {
      std::vector<std::size_t> focal;
      for (const auto& name : strings(cfg.at("focal"))) focal.push_back(position(causes, name));
      auto partition = FocalPartition::from_focal(focal, causes.size());
      partition.validate(causes.size());
      check_length(a, partition.focal.size(), "--a");
      inputs["focal"] = cfg.at("focal");
      std::vector<std::string> aux;
      for (auto k : partition.auxiliary) aux.push_back(causes[k]);
      inputs["auxiliary"] = aux;
      overlap = to_json(overlap_check(table, causes, partition));
      distribution = focal_estimand(table, causes, outcome, partition, a).dist;
      if (src.scm) reference = structural_focal_po(*src.scm, partition, a);
    } else {
      const Levels a_prime = ints(cfg.at("a_prime"));
      check_length(a, causes.size(), "--a");
      check_length(a_prime, causes.size(), "--a-prime");
      inputs["a_prime"] = a_prime;
      Json zdesc;
      auto fn = cause_zhat(cfg, causes, table, zdesc);
      inputs["zhat"] = zdesc;
      overlap = to_json(overlap_check(table, causes, fn));
      distribution = counterfactual_estimand(table, causes, outcome, a, a_prime, fn);
      if (src.scm) reference = structural_counterfactual(*src.scm, a, a_prime);
    }
  } catch (const IdentificationRefusal& e) {
    refusal = refusal_json(e);
  } catch (const ZeroProbabilityEvidence& e) {
    refusal = {{"type", "ZeroProbabilityEvidence"}, {"message", e.what()}};
  }

  Json payload = {{"estimand", estimand},
                  {"inputs", inputs},
                  {"distribution", distribution},
                  {"overlap_report", overlap},
                  {"refusal", refusal}};
  if (src.scm) payload["structural_reference"] = reference;

  Output out(cfg, "identify");
  out.json("estimand.json", payload);

  std::ostringstream csv;
  csv << "y,probability\n";
  if (distribution.is_array())
    for (std::size_t y = 0; y < distribution.size(); ++y)
      csv << y << ',' << format_double(distribution[y].get<double>()) << "\n";
  emit(cfg, io,
       {{"command", "identify"},
        {"estimand", estimand},
        {"distribution", distribution},
        {"refusal", refusal},
        {"files", out.files()}},
       csv.str());

  if (!refusal.is_null()) {
    io.err << "identification refused (" << refusal.at("type").get<std::string>()
           << "): " << refusal.at("message").get<std::string>() << "\n";
    return kExitRefusal;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sensitivity

LinearEstimand parse_functional(const std::string& text, int y_card) {
  if (text == "mean") return LinearEstimand::mean(y_card);
  if (text.rfind("prob:", 0) == 0) {
    auto level = parse_value(text.substr(5), Kind::kInt, "functional").get<int>();
    return LinearEstimand::probability_of(y_card, level);
  }
  throw InvalidInput("--functional must be 'mean' or 'prob:<level>'");
}

// Regions must widen and nest as the budget grows; budget 0 is the naive point.
Json check_regions(const SensitivityReport& rep, std::vector<std::string>& failures) {
  constexpr double kTol = 1e-9;
  std::vector<std::size_t> order(rep.regions.size());
  std::iota(order.begin(), order.end(), 0);
  auto budget = [&](std::size_t i) { return rep.regions[i].budget.value_or(kInf); };
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return budget(x) < budget(y); });
  bool monotone = true;
  bool nested = true;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& lo = rep.regions[order[i - 1]];
    const auto& hi = rep.regions[order[i]];
    monotone = monotone && hi.width() >= lo.width() - kTol;
    nested = nested && hi.lower <= lo.lower + kTol && hi.upper >= lo.upper - kTol;
  }
  if (!monotone) failures.push_back("region widths are not monotone in the budget");
  if (!nested) failures.push_back("regions are not nested in the budget");
  Json zero = nullptr;
  for (const auto& r : rep.regions) {
    if (r.budget && *r.budget == 0.0) {
      bool point = r.width() <= kTol && std::abs(r.lower - rep.naive) <= kTol;
      if (!point) failures.push_back("budget-0 region is not the naive point");
      zero = point;
    }
  }
  Json truth_inside = nullptr;
  if (rep.truth)
    for (const auto& r : rep.regions)
      if (budget(static_cast<std::size_t>(&r - rep.regions.data())) >= 2.0)
        truth_inside = *rep.truth >= r.lower - kTol && *rep.truth <= r.upper + kTol;
  return {{"monotone_widths", monotone},
          {"nested", nested},
          {"budget_zero_is_naive_point", zero},
          {"truth_in_full_region", truth_inside}};
}

int cmd_sensitivity(const Json& cfg, Streams io) {
  const auto budgets = doubles(cfg.at("budgets"));
  if (budgets.empty()) throw InvalidInput("--budgets is empty");
  for (double b : budgets)
    if (!(b >= 0.0)) throw InvalidInput("budgets must be non-negative");

  SensitivityReport rep;
  if (has(cfg, "scm")) {
    ScmSpec scm = load_scm(str(cfg, "scm"));
    Levels a = has(cfg, "a") ? ints(cfg.at("a")) : Levels(scm.causes.size(), 0);
    check_length(a, scm.causes.size(), "--a");
    rep = sensitivity_report(scm, a, parse_functional(str(cfg, "functional"), scm.y.card), budgets);
  } else {
    if (!has(cfg, "data") || !has(cfg, "model"))
      throw InvalidInput("sensitivity needs --scm, or --data with --model");
    LatentClassModel model = load_model(str(cfg, "model"));
    Dataset data = read_data_file(str(cfg, "data"), model.columns);
    const auto outcome = str(cfg, "outcome");
    auto causes = has(cfg, "causes") ? strings(cfg.at("causes")) : model_cause_names(model);
    Levels a = has(cfg, "a") ? ints(cfg.at("a")) : Levels(causes.size(), 0);
    check_length(a, causes.size(), "--a");
    int y_card = data.columns()[data.column_index(outcome)].card;
    rep = sensitivity_report(data, causes, outcome, model, a,
                             parse_functional(str(cfg, "functional"), y_card), budgets);
  }
  auto benchmark_region =
      calibrated_bounds(rep.margin_y, rep.margin_z, rep.prior_z, rep.estimand, rep.benchmark);

  std::vector<std::string> failures;
  Json checks = check_regions(rep, failures);

  std::ostringstream csv;
  csv << "budget,lower,upper,width,solver,attained_q_digest\n";
  Json rows = to_json(rep).at("rows");
  for (std::size_t i = 0; i < rep.regions.size(); ++i) {
    const auto& r = rep.regions[i];
    csv << format_double(r.budget.value_or(kInf)) << ',' << format_double(r.lower) << ','
        << format_double(r.upper) << ',' << format_double(r.width()) << ',' << to_string(r.solver)
        << ',' << rows[i].at("attained_q_digest").get<std::string>() << "\n";
  }

  Output out(cfg, "sensitivity");
  out.json("sensitivity_report.json",
           {{"report", to_json(rep)}, {"benchmark_region", to_json(benchmark_region)}, {"checks", checks}});
  out.text("sensitivity.csv", csv.str());

  emit(cfg, io,
       {{"command", "sensitivity"},
        {"naive", rep.naive},
        {"truth", rep.truth ? Json(*rep.truth) : Json(nullptr)},
        {"benchmark_budget", rep.benchmark},
        {"benchmark_interval", {benchmark_region.lower, benchmark_region.upper}},
        {"checks", checks},
        {"files", out.files()}},
       csv.str());
  if (!failures.empty()) {
    for (const auto& f : failures) io.err << "sensitivity check failed: " << f << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- demo-nonid

int cmd_demo_nonid(const Json& cfg, Streams io) {
  ScmSpec tmpl = has(cfg, "scm") ? load_scm(str(cfg, "scm")) : demo_template();
  Levels a_star = has(cfg, "a_star") ? ints(cfg.at("a_star")) : Levels(tmpl.causes.size(), 1);
  check_length(a_star, tmpl.causes.size(), "--a-star");
  const double min_gap = number_or_inf(cfg.at("min_gap"));

  auto pair = make_confounded_pair(tmpl, a_star);
  const auto obs1 = observed_joint(pair.original);
  const auto obs2 = observed_joint(pair.independent);
  const double observed_diff = max_abs_diff(obs1, obs2);

  std::vector<std::string> az = pair.original.cause_names();
  az.push_back(pair.original.z.name);
  const double factor_diff = max_abs_diff(marginalize(structural_joint(pair.original), az),
                                          marginalize(structural_joint(pair.independent), az));

  const auto po1 = ground_truth_po(pair.original, a_star).dist;
  const auto po2 = ground_truth_po(pair.independent, a_star).dist;
  const double tv = total_variation(po1, po2);

  Assignment evidence;
  for (std::size_t k = 0; k < a_star.size(); ++k) evidence.emplace_back(pair.original.causes[k].name, a_star[k]);
  auto naive_table = marginalize(condition(obs1, evidence), {pair.original.y.name});
  std::vector<double> naive(naive_table.probs().begin(), naive_table.probs().end());
  double independent_vs_naive = 0.0;
  for (std::size_t y = 0; y < naive.size(); ++y)
    independent_vs_naive = std::max(independent_vs_naive, std::abs(po2[y] - naive[y]));

  constexpr double kExact = 1e-10;
  const bool ok_obs = observed_diff <= kExact && factor_diff <= kExact;
  const bool ok_gap = tv >= min_gap;
  const bool ok_indep = independent_vs_naive <= kExact;

  Json unidentified = Json::array();
  for (const auto& r : pair.unidentified_rows) unidentified.push_back(r);

  Json comparison = {{"a_star", a_star},
                     {"observed_max_abs_diff", observed_diff},
                     {"factor_marginal_max_abs_diff", factor_diff},
                     {"po_original", po1},
                     {"po_independent", po2},
                     {"naive_conditional", naive},
                     {"tv_gap", tv},
                     {"min_gap", min_gap},
                     {"independent_matches_naive_max_abs_diff", independent_vs_naive},
                     {"unidentified_rows", unidentified},
                     {"checks",
                      {{"identical_observables", ok_obs},
                       {"gap_at_least_min", ok_gap},
                       {"independent_member_equals_naive", ok_indep}}}};

  Output out(cfg, "demo-nonid");
  out.json("scm_original.json", {{"scm", to_json(pair.original)}});
  out.json("scm_independent.json", {{"scm", to_json(pair.independent)}});
  out.json("comparison.json", {{"comparison", comparison}});

  std::ostringstream csv;
  csv << "y,po_original,po_independent,naive_conditional\n";
  for (std::size_t y = 0; y < po1.size(); ++y)
    csv << y << ',' << format_double(po1[y]) << ',' << format_double(po2[y]) << ','
        << format_double(naive[y]) << "\n";
  emit(cfg, io,
       {{"command", "demo-nonid"},
        {"observed_max_abs_diff", observed_diff},
        {"tv_gap", tv},
        {"checks", comparison.at("checks")},
        {"files", out.files()}},
       csv.str());

  if (!(ok_obs && ok_gap && ok_indep)) {
    io.err << "demo-nonid check failed:"
           << (ok_obs ? "" : " observables differ;") << (ok_gap ? "" : " gap below min_gap;")
           << (ok_indep ? "" : " independent member differs from P(Y | A = a*);") << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"simulate",
       "sample data from a structural model",
       with_common({
           {"scm", Kind::kString, kNone, "structural model JSON (overrides --template)"},
           {"template", Kind::kString, "random", "random or demo"},
           {"z_card", Kind::kInt, 2, "confounder levels (random template)"},
           {"causes", Kind::kInt, 3, "number of causes (random template)"},
           {"cause_card", Kind::kInt, 2, "levels per cause (random template)"},
           {"y_card", Kind::kInt, 2, "outcome levels (random template)"},
           {"x_card", Kind::kInt, 0, "covariate levels, 0 for none (random template)"},
           {"concentration", Kind::kDouble, 1.0, "Dirichlet concentration (random template)"},
           {"n", Kind::kUInt, 1000, "rows to sample"},
           {"a", Kind::kString, kNone, "assignments for ground truth, e.g. '0,1,1;1,0,0' (default all)"},
       }),
       cmd_simulate},
      {"fit",
       "fit a latent class model to the causes",
       with_common({
           {"data", Kind::kString, kNone, "data CSV"},
           {"causes", Kind::kStrings, kNone, "cause columns (default: all but outcome and covariates)"},
           {"outcome", Kind::kString, "Y", "outcome column, excluded from the fit"},
           {"covariates", Kind::kStrings, Json::array(), "extra indicator columns"},
           {"classes", Kind::kInt, 2, "number of latent classes"},
           {"bic_classes", Kind::kInts, Json::array({1, 2, 3, 4}), "class counts for the BIC table"},
           {"restarts", Kind::kInt, 10, "random restarts"},
           {"tol", Kind::kDouble, 1e-8, "log-likelihood convergence tolerance"},
           {"max_iter", Kind::kInt, 2000, "EM iteration cap"},
           {"theta_floor", Kind::kDouble, 1e-12, "lower bound on conditional probabilities"},
       }),
       cmd_fit},
      {"gate",
       "test mutual independence of the causes given the substitute confounder",
       with_common({
           {"data", Kind::kString, kNone, "data CSV"},
           {"causes", Kind::kStrings, kNone, "cause columns"},
           {"outcome", Kind::kString, "Y", "outcome column"},
           {"covariates", Kind::kStrings, Json::array(), "columns that are not causes"},
           {"model", Kind::kString, kNone, "fitted model JSON; strata are its MAP classes"},
           {"zhat", Kind::kString, kNone, "CSV with a zhat column, used when --model is absent"},
           {"alpha", Kind::kDouble, 0.05, "significance level"},
           {"bonferroni", Kind::kBool, false, "divide alpha by the number of causes"},
           {"permutations", Kind::kInt, 999, "permutations per cause"},
           {"power_trials", Kind::kInt, 20, "simulated trials per strength in the power note"},
           {"power_permutations", Kind::kInt, 99, "permutations per power trial"},
           {"target_power", Kind::kDouble, 0.8, "power defining the detectable strength"},
           {"min_stratum_rows", Kind::kUInt, 5, "smaller strata are skipped"},
           {"max_collapsed_causes", Kind::kUInt, 6, "beyond this use pairwise statistics"},
       }),
       cmd_gate},
      {"identify",
       "compute an identified causal estimand or refuse",
       with_common({
           {"estimand", Kind::kString, "adjust", "adjust, focal (thm7) or counterfactual (thm8)"},
           {"source", Kind::kString, "scm", "scm, joint or data"},
           {"scm", Kind::kString, kNone, "structural model JSON"},
           {"joint", Kind::kString, kNone, "joint table JSON"},
           {"data", Kind::kString, kNone, "data CSV"},
           {"latent_data", Kind::kString, kNone, "CSV of latent columns joined to --data"},
           {"causes", Kind::kStrings, kNone, "cause names (default: inferred)"},
           {"outcome", Kind::kString, "Y", "outcome name"},
           {"latent", Kind::kString, "Z", "confounder name for adjust"},
           {"covariates", Kind::kStrings, Json::array(), "names that are neither causes nor outcome"},
           {"focal", Kind::kStrings, Json::array(), "focal causes for the focal estimand"},
           {"a", Kind::kInts, Json::array(), "assignment (focal: focal causes only)"},
           {"a_prime", Kind::kInts, Json::array(), "counterfactual assignment"},
           {"model", Kind::kString, kNone, "fitted model giving zhat(a)"},
           {"zhat_causes", Kind::kStrings, kNone, "zhat(a) = joint level of these causes"},
       }),
       cmd_identify},
      {"sensitivity",
       "bounds on a potential outcome functional over copula budgets",
       with_common({
           {"scm", Kind::kString, kNone, "structural model JSON (true confounder)"},
           {"data", Kind::kString, kNone, "data CSV (with --model)"},
           {"model", Kind::kString, kNone, "fitted model JSON"},
           {"causes", Kind::kStrings, kNone, "cause columns (default: model causes)"},
           {"outcome", Kind::kString, "Y", "outcome column"},
           {"a", Kind::kInts, kNone, "cause assignment (default all zeros)"},
           {"functional", Kind::kString, "mean", "mean or prob:<level>"},
           {"budgets", Kind::kDoubles, Json::array({0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1, 1.5, 2, "inf"}),
            "L1 copula budgets; inf = unrestricted"},
       }),
       cmd_sensitivity},
      {"demo-nonid",
       "two models with equal observables and different causal effects",
       with_common({
           {"scm", Kind::kString, kNone, "template model JSON (default: built-in)"},
           {"a_star", Kind::kInts, kNone, "assignment compared (default all ones)"},
           {"min_gap", Kind::kDouble, 0.05, "required total variation gap"},
       }),
       cmd_demo_nonid},
  };
  return table;
}

}  // namespace mcause::cli
