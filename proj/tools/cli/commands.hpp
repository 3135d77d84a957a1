#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace mcause::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

using Handler = std::function<int(const Json& config, Streams io)>;

struct Command {
  std::string name;
  std::string description;
  std::vector<Param> params;  // excludes --config
  Handler handler;
};

const std::vector<Command>& commands();

}  // namespace mcause::cli
