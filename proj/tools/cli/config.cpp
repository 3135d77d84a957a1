#include "cli/config.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mcause/error.hpp"

namespace mcause::cli {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    auto b = cur.find_first_not_of(" \t");
    auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("--" + flag_name(key) + ": '" + s + "' is not a number");
  }
}

long long to_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("--" + flag_name(key) + ": '" + s + "' is not an integer");
  }
}

Json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& c : f)
    if (c == '_') c = '-';
  return f;
}

Json parse_value(const std::string& raw, Kind kind, const std::string& key) {
  switch (kind) {
    case Kind::kInt:
      return to_int(raw, key);
    case Kind::kUInt: {
      long long v = to_int(raw, key);
      if (v < 0) throw InvalidInput("--" + flag_name(key) + " must be non-negative");
      return static_cast<unsigned long long>(v);
    }
    case Kind::kDouble:
      return number_json(to_double(raw, key));
    case Kind::kString:
      return raw;
    case Kind::kBool:
      if (raw == "true" || raw == "1" || raw.empty()) return true;
      if (raw == "false" || raw == "0") return false;
      throw InvalidInput("--" + flag_name(key) + ": expected true or false");
    case Kind::kInts: {
      Json arr = Json::array();
      if (!raw.empty())
        for (const auto& p : split(raw, ',')) arr.push_back(to_int(p, key));
      return arr;
    }
    case Kind::kDoubles: {
      Json arr = Json::array();
      if (!raw.empty())
        for (const auto& p : split(raw, ',')) arr.push_back(number_json(to_double(p, key)));
      return arr;
    }
    case Kind::kStrings: {
      Json arr = Json::array();
      if (!raw.empty())
        for (const auto& p : split(raw, ',')) arr.push_back(p);
      return arr;
    }
  }
  return nullptr;
}

Json coerce(const Json& v, Kind kind, const std::string& key) {
  if (v.is_null()) return v;
  auto bad = [&]() -> Json {
    throw InvalidInput("config key '" + key + "' has the wrong type");
  };
  if (v.is_string() && kind != Kind::kString) return parse_value(v.get<std::string>(), kind, key);
  switch (kind) {
    case Kind::kInt:
      return v.is_number_integer() ? v : bad();
    case Kind::kUInt:
      return v.is_number_unsigned() ? v : bad();
    case Kind::kDouble:
      return v.is_number() ? Json(v.get<double>()) : bad();
    case Kind::kString:
      return v.is_string() ? v : bad();
    case Kind::kBool:
      return v.is_boolean() ? v : bad();
    case Kind::kInts:
    case Kind::kDoubles:
    case Kind::kStrings: {
      if (!v.is_array()) return bad();
      Kind elem = kind == Kind::kInts ? Kind::kInt : kind == Kind::kDoubles ? Kind::kDouble : Kind::kString;
      Json arr = Json::array();
      for (const auto& e : v) arr.push_back(coerce(e, elem, key));
      return arr;
    }
  }
  return bad();
}

Json resolve_config(const std::vector<Param>& params, const Json& file,
                    const std::map<std::string, std::string>& flags) {
  Json cfg = Json::object();
  for (const auto& p : params) cfg[p.key] = p.fallback;
  if (!file.is_null()) {
    if (!file.is_object()) throw InvalidInput("config file must hold a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      const Param* match = nullptr;
      for (const auto& p : params)
        if (p.key == it.key()) match = &p;
      if (!match) throw InvalidInput("unknown config key '" + it.key() + "'");
      cfg[it.key()] = coerce(it.value(), match->kind, it.key());
    }
  }
  for (const auto& [key, raw] : flags) {
    for (const auto& p : params)
      if (p.key == key) cfg[key] = parse_value(raw, p.kind, key);
  }
  return cfg;
}

}  // namespace mcause::cli
