#include "cli/cli.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "mcause/error.hpp"

namespace mcause::cli {
namespace {

struct Bound {
  const Param* param;
  CLI::Option* option;
  std::string raw;
  bool flag = false;
};

Json load_config_file(const std::string& path) {
  if (path.empty()) return nullptr;
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidInput("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple-cause causal inference: simulate, fit, gate, identify, sensitivity", "mcause"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MCAUSE_VERSION));

  // Option storage must outlive parsing; deque-like stability via unique_ptr.
  std::map<std::string, std::vector<std::unique_ptr<Bound>>> bound;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, bool> bool_values;

  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.description);
    sub->add_option("--config", config_paths[cmd.name], "JSON file of parameters; flags override it");
    for (const auto& p : cmd.params) {
      auto b = std::make_unique<Bound>();
      b->param = &p;
      const std::string flag = "--" + flag_name(p.key);
      std::string help = p.help;
      if (!p.fallback.is_null()) help += " [" + p.fallback.dump() + "]";
      if (p.kind == Kind::kBool) {
        b->flag = true;
        auto& v = bool_values[cmd.name + "." + p.key];
        b->option = sub->add_flag(flag + ",!--no-" + flag_name(p.key), v, help);
      } else {
        b->option = sub->add_option(flag, b->raw, help);
      }
      bound[cmd.name].push_back(std::move(b));
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << MCAUSE_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  for (const auto& cmd : commands()) {
    auto* sub = app.get_subcommand(cmd.name);
    if (!sub->parsed()) continue;
    // A subcommand's own --help is reported through the parse path above.
    try {
      std::map<std::string, std::string> flags;
      for (const auto& b : bound[cmd.name]) {
        if (b->option->count() == 0) continue;
        flags[b->param->key] =
            b->flag ? (bool_values[cmd.name + "." + b->param->key] ? "true" : "false") : b->raw;
      }
      Json cfg = resolve_config(cmd.params, load_config_file(config_paths[cmd.name]), flags);
      const auto format = cfg.at("format").get<std::string>();
      if (format != "json" && format != "csv") throw InvalidInput("--format must be json or csv");
      return cmd.handler(cfg, Streams{out, err});
    } catch (const IdentificationRefusal& e) {
      err << "identification refused: " << e.what() << "\n";
      return kExitRefusal;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitInputError;
    }
  }
  return kExitInputError;
}

}  // namespace mcause::cli
