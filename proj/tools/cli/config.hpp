#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcause::cli {

using Json = nlohmann::json;

enum class Kind { kInt, kUInt, kDouble, kString, kBool, kInts, kDoubles, kStrings };

// One configurable parameter: config key `key`, flag --key with '_' -> '-'.
struct Param {
  std::string key;
  Kind kind;
  Json fallback;  // null = no default (optional input)
  std::string help;
};

// Converts a flag string to the JSON value of the given kind. Lists are
// comma separated; doubles accept "inf". Throws InvalidInput.
Json parse_value(const std::string& raw, Kind kind, const std::string& key);

// Checks a config-file value against its kind, converting strings where a
// list or number is expected.
Json coerce(const Json& value, Kind kind, const std::string& key);

// defaults <- config file <- flags. Unknown config-file keys are rejected.
Json resolve_config(const std::vector<Param>& params, const Json& file,
                    const std::map<std::string, std::string>& flags);

std::string flag_name(const std::string& key);

}  // namespace mcause::cli
