#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "mcause/ci_gate.hpp"
#include "mcause/factor_model.hpp"
#include "mcause/identify.hpp"
#include "mcause/joint_table.hpp"
#include "mcause/scm.hpp"
#include "mcause/sensitivity.hpp"

namespace mcause {

using Json = nlohmann::json;

// Rounds every floating-point number to `digits` significant digits so that
// dumps are stable; non-finite numbers become the strings "inf"/"-inf"/"nan".
Json round_numbers(const Json& j, int digits = 12);
// round_numbers + 2-space indented dump with a trailing newline.
std::string dump_json(const Json& j);

// Short hex digest (FNV-1a over 12-digit renderings) of a numeric vector.
std::string digest(std::span<const double> values);

// Numbers that may be infinite.
Json number_or_inf(double v);
double number_or_inf(const Json& j);

Json to_json(const VarSpec& v);
VarSpec var_spec_from_json(const Json& j);

// {"vars": [{"name", "card"}...], "probs": [row-major]}
Json to_json(const JointTable& t);
JointTable joint_table_from_json(const Json& j);

Json to_json(const ScmSpec& scm);
ScmSpec scm_from_json(const Json& j);

Json to_json(const LatentClassModel& m);
LatentClassModel model_from_json(const Json& j);

Json to_json(const FitReport& r);
Json to_json(const BicRow& r);
Json to_json(const CiTestResult& r);
Json to_json(const PowerNote& p);
Json to_json(const GateReport& r);
Json to_json(const SubstituteCheck& c);
Json to_json(const OverlapReport& r);
Json to_json(const PotentialOutcomeDist& d);
Json to_json(const IgnoranceRegion& r);
Json to_json(const SensitivityReport& r);
SensitivityReport sensitivity_report_from_json(const Json& j);

const char* to_string(GateDecision d);
const char* to_string(BoundSolver s);

}  // namespace mcause
