#include "mcause/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "mcause/error.hpp"

namespace mcause {
namespace {

std::string render(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw InvalidInput(std::string("JSON is missing field '") + key + "'");
  return j.at(key);
}

Json table_rows(const ConditionalTable& t) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Json conditional_to_json(const ConditionalTable& t) {
  Json parents = Json::array();
  for (const auto& p : t.parents) parents.push_back(p.name);
  return {{"child", t.child.name}, {"parents", parents}, {"rows", table_rows(t)}};
}

ConditionalTable conditional_from_json(const Json& j,
                                       const std::map<std::string, VarSpec>& vars) {
  auto lookup = [&](const std::string& n) {
    auto it = vars.find(n);
    if (it == vars.end()) throw UnknownVariable(n);
    return it->second;
  };
  ConditionalTable t;
  t.child = lookup(field(j, "child").get<std::string>());
  for (const auto& p : field(j, "parents")) t.parents.push_back(lookup(p.get<std::string>()));
  const auto& rows = field(j, "rows");
  if (!rows.is_array() || rows.size() != t.row_count())
    throw InvalidInput("conditional table for '" + t.child.name + "' has the wrong row count");
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(t.child.card))
      throw InvalidInput("conditional table row for '" + t.child.name + "' has the wrong length");
    for (const auto& v : row) t.values.push_back(v.get<double>());
  }
  return t;
}

Json levels_list(const std::vector<Levels>& lv) {
  Json out = Json::array();
  for (const auto& l : lv) out.push_back(l);
  return out;
}

}  // namespace

Json round_numbers(const Json& j, int digits) {
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    double r = std::strtod(render(v, digits).c_str(), nullptr);
    if (r == 0.0) r = 0.0;  // drop negative zero
    return r;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& e : j) out.push_back(round_numbers(e, digits));
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_numbers(it.value(), digits);
    return out;
  }
  return j;
}

std::string dump_json(const Json& j) { return round_numbers(j).dump(2) + "\n"; }

std::string digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    double r = std::strtod(render(v, 12).c_str(), nullptr);
    if (r == 0.0) r = 0.0;
    for (char c : render(r, 12) + ";") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_or_inf(const Json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InvalidInput("expected a number or \"inf\", got '" + s + "'");
  }
  return j.get<double>();
}

const char* to_string(GateDecision d) { return d == GateDecision::kPass ? "PASS" : "FAIL"; }
const char* to_string(BoundSolver s) {
  return s == BoundSolver::kSimplex ? "simplex" : "vertex-enum";
}

Json to_json(const VarSpec& v) { return {{"name", v.name}, {"card", v.card}}; }

VarSpec var_spec_from_json(const Json& j) {
  return {field(j, "name").get<std::string>(), field(j, "card").get<int>()};
}

Json to_json(const JointTable& t) {
  Json vars = Json::array();
  for (const auto& v : t.vars()) vars.push_back(to_json(v));
  return {{"vars", vars}, {"probs", std::vector<double>(t.probs().begin(), t.probs().end())}};
}

JointTable joint_table_from_json(const Json& j) {
  try {
    std::vector<VarSpec> vars;
    for (const auto& v : field(j, "vars")) vars.push_back(var_spec_from_json(v));
    return JointTable(std::move(vars), field(j, "probs").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed joint table JSON: ") + e.what());
  }
}

Json to_json(const ScmSpec& scm) {
  Json j;
  j["z"] = to_json(scm.z);
  if (scm.x) j["x"] = to_json(*scm.x);
  Json causes = Json::array();
  for (const auto& c : scm.causes) causes.push_back(to_json(c));
  j["causes"] = causes;
  j["y"] = to_json(scm.y);
  Json tables;
  tables["p_z"] = scm.p_z;
  if (scm.p_x_given_z) tables["p_x_given_z"] = conditional_to_json(*scm.p_x_given_z);
  Json pa = Json::array();
  for (const auto& t : scm.p_a_given_z) pa.push_back(conditional_to_json(t));
  tables["p_a_given_z"] = pa;
  tables["p_y_given_az"] = conditional_to_json(scm.p_y_given_az);
  j["tables"] = tables;
  return j;
}

ScmSpec scm_from_json(const Json& j) {
  try {
    ScmSpec scm;
    std::map<std::string, VarSpec> vars;
    scm.z = var_spec_from_json(field(j, "z"));
    scm.y = var_spec_from_json(field(j, "y"));
    vars[scm.z.name] = scm.z;
    vars[scm.y.name] = scm.y;
    if (j.contains("x") && !j.at("x").is_null()) {
      scm.x = var_spec_from_json(j.at("x"));
      vars[scm.x->name] = *scm.x;
    }
    for (const auto& c : field(j, "causes")) {
      scm.causes.push_back(var_spec_from_json(c));
      vars[scm.causes.back().name] = scm.causes.back();
    }
    const auto& t = field(j, "tables");
    scm.p_z = field(t, "p_z").get<std::vector<double>>();
    if (t.contains("p_x_given_z")) scm.p_x_given_z = conditional_from_json(t.at("p_x_given_z"), vars);
    for (const auto& c : field(t, "p_a_given_z"))
      scm.p_a_given_z.push_back(conditional_from_json(c, vars));
    scm.p_y_given_az = conditional_from_json(field(t, "p_y_given_az"), vars);
    scm.validate();
    return scm;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed SCM JSON: ") + e.what());
  }
}

Json to_json(const LatentClassModel& m) {
  Json cols = Json::array();
  for (const auto& c : m.columns) cols.push_back(to_json(c));
  return {{"n_classes", m.n_classes}, {"pi", m.pi}, {"columns", cols},
          {"n_causes", m.n_causes}, {"theta", m.theta}};
}

LatentClassModel model_from_json(const Json& j) {
  try {
    LatentClassModel m;
    m.n_classes = field(j, "n_classes").get<int>();
    m.pi = field(j, "pi").get<std::vector<double>>();
    for (const auto& c : field(j, "columns")) m.columns.push_back(var_spec_from_json(c));
    m.n_causes = field(j, "n_causes").get<std::size_t>();
    m.theta = field(j, "theta").get<std::vector<std::vector<std::vector<double>>>>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed model JSON: ") + e.what());
  }
}

Json to_json(const FitReport& r) {
  return {{"loglik_trace", r.loglik_trace}, {"restart_traces", r.restart_traces},
          {"n_restarts", r.n_restarts},     {"best_restart_index", r.best_restart_index},
          {"converged", r.converged},       {"final_loglik", r.final_loglik},
          {"theta_floor", r.theta_floor}};
}

Json to_json(const BicRow& r) {
  return {{"n_classes", r.n_classes}, {"loglik", r.loglik}, {"n_params", r.n_params},
          {"bic", r.bic}, {"converged", r.converged}};
}

Json to_json(const CiTestResult& r) {
  return {{"cause", r.cause},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"n_permutations", r.n_permutations},
          {"small_strata", r.small_strata},
          {"pairwise_approximation", r.pairwise_approximation}};
}

Json to_json(const PowerNote& p) {
  Json curve = Json::array();
  for (const auto& [s, rate] : p.curve) curve.push_back({{"strength", s}, {"rejection_rate", rate}});
  return {{"cause", p.cause},
          {"source_cause", p.source_cause},
          {"sample_size", p.sample_size},
          {"measure", "probability that A(cause) is overwritten by a copy of A(source_cause)"},
          {"min_detectable_strength", number_or_inf(p.min_detectable_strength)},
          {"target_power", p.target_power},
          {"trials", p.trials},
          {"curve", curve}};
}

Json to_json(const GateReport& r) {
  Json tests = Json::array();
  for (const auto& t : r.tests) tests.push_back(to_json(t));
  return {{"per_cause_pvalues", r.per_cause_pvalues},
          {"alpha", r.alpha},
          {"effective_alpha", r.effective_alpha},
          {"bonferroni", r.bonferroni},
          {"decision", to_string(r.decision)},
          {"power_note", to_json(r.power)},
          {"n_permutations", r.n_permutations},
          {"tests", tests}};
}

Json to_json(const SubstituteCheck& c) {
  return {{"holds", c.holds}, {"cause_gap", c.cause_gap}, {"po_gap", c.po_gap},
          {"tolerance", c.tolerance}};
}

Json to_json(const OverlapReport& r) {
  Json recs = Json::array();
  for (const auto& rec : r.records)
    recs.push_back({{"stratum", rec.stratum}, {"missing", levels_list(rec.missing)}});
  return {{"satisfied", r.satisfied}, {"records", recs}};
}

Json to_json(const PotentialOutcomeDist& d) { return {{"a", d.a}, {"dist", d.dist}}; }

Json to_json(const IgnoranceRegion& r) {
  return {{"estimand", r.estimand},
          {"lower", r.lower},
          {"upper", r.upper},
          {"attained_q_lower", r.attained_q_lower},
          {"attained_q_upper", r.attained_q_upper},
          {"outcome_model_lower", r.outcome_model_lower},
          {"outcome_model_upper", r.outcome_model_upper},
          {"solver", to_string(r.solver)},
          {"budget", r.budget ? number_or_inf(*r.budget) : Json("inf")},
          {"unsupported_z", r.unsupported_z},
          {"sharp", r.sharp}};
}

Json to_json(const SensitivityReport& r) {
  Json rows = Json::array();
  for (const auto& reg : r.regions) {
    std::vector<double> both = reg.attained_q_lower;
    both.insert(both.end(), reg.attained_q_upper.begin(), reg.attained_q_upper.end());
    rows.push_back({{"budget", reg.budget ? number_or_inf(*reg.budget) : Json("inf")},
                    {"lower", reg.lower},
                    {"upper", reg.upper},
                    {"solver", to_string(reg.solver)},
                    {"attained_q_digest", digest(both)},
                    {"region", to_json(reg)}});
  }
  return {{"source", r.source},
          {"a", r.a},
          {"estimand", {{"description", r.estimand.description}, {"weights", r.estimand.weights}}},
          {"margin_y", r.margin_y},
          {"margin_z", r.margin_z},
          {"prior_z", r.prior_z},
          {"naive", r.naive},
          {"truth", r.truth ? Json(*r.truth) : Json(nullptr)},
          {"benchmark", {{"budget", r.benchmark}, {"measure", "stratum-weighted L1 dependence of A(k) on A(-k) given zhat, max over k"}}},
          {"rows", rows}};
}

SensitivityReport sensitivity_report_from_json(const Json& j) {
  try {
    SensitivityReport r;
    r.source = field(j, "source").get<std::string>();
    r.a = field(j, "a").get<Levels>();
    r.estimand.description = field(field(j, "estimand"), "description").get<std::string>();
    r.estimand.weights = field(field(j, "estimand"), "weights").get<std::vector<double>>();
    r.margin_y = field(j, "margin_y").get<std::vector<double>>();
    r.margin_z = field(j, "margin_z").get<std::vector<double>>();
    r.prior_z = field(j, "prior_z").get<std::vector<double>>();
    r.naive = field(j, "naive").get<double>();
    if (!field(j, "truth").is_null()) r.truth = j.at("truth").get<double>();
    r.benchmark = field(field(j, "benchmark"), "budget").get<double>();
    for (const auto& row : field(j, "rows")) {
      const auto& g = field(row, "region");
      IgnoranceRegion reg;
      reg.estimand = field(g, "estimand").get<std::string>();
      reg.lower = field(g, "lower").get<double>();
      reg.upper = field(g, "upper").get<double>();
      reg.attained_q_lower = field(g, "attained_q_lower").get<std::vector<double>>();
      reg.attained_q_upper = field(g, "attained_q_upper").get<std::vector<double>>();
      reg.outcome_model_lower = field(g, "outcome_model_lower").get<std::vector<double>>();
      reg.outcome_model_upper = field(g, "outcome_model_upper").get<std::vector<double>>();
      reg.solver = field(g, "solver").get<std::string>() == "simplex"
                       ? BoundSolver::kSimplex
                       : BoundSolver::kVertexEnumeration;
      reg.budget = number_or_inf(field(g, "budget"));
      reg.unsupported_z = field(g, "unsupported_z").get<std::vector<int>>();
      reg.sharp = field(g, "sharp").get<bool>();
      r.regions.push_back(std::move(reg));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed sensitivity report JSON: ") + e.what());
  }
}

}  // namespace mcause
