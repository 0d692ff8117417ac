#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "chessrl/errors.hpp"
#include "chessrl/parallel/exec.hpp"
#include "commands.hpp"

namespace chessrl::cli {
namespace {

std::string env_token(std::string name) {
  for (auto& c : name) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

std::vector<CLI::App*> children(CLI::App& app) {
  return app.get_subcommands([](CLI::App*) { return true; });
}

// Every long option gets CHESSRL_<SUBCOMMAND...>_<NAME>.
void assign_env_names(CLI::App& app, const std::string& prefix) {
  for (CLI::Option* opt : app.get_options()) {
    const auto& lnames = opt->get_lnames();
    if (lnames.empty() || lnames.front() == "help" || lnames.front() == "config") continue;
    opt->envname(prefix + "_" + env_token(lnames.front()));
  }
  for (CLI::App* sub : children(app)) assign_env_names(*sub, prefix + "_" + env_token(sub->get_name()));
}

std::string config_value(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw UsageError("config key " + where + " must be a string, number or boolean");
}

// Fills options still unset after flags and environment from the config
// file. Sections name subcommands; unknown keys are usage errors.
void apply_config(CLI::App& app, const nlohmann::json& section, const std::string& where, bool active) {
  if (!section.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (value.is_object()) {
      CLI::App* sub = nullptr;
      for (CLI::App* c : children(app))
        if (c->get_name() == key) sub = c;
      if (sub == nullptr) throw UsageError("unknown config section '" + path + "'");
      apply_config(*sub, value, path, active && sub->parsed());
      continue;
    }
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "help" || key == "config") throw UsageError("unknown config key '" + path + "'");
    if (!active || opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& item : value) opt->add_result(config_value(item, path));
    } else {
      opt->add_result(config_value(value, path));
    }
    opt->run_callback();
  }
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool tables) {
  CLI::App app{"Verifiable-reward chess RL toolkit: puzzle data, prompts, rewards, GRPO, evaluation.", "chessrl"};
  app.footer("Exit codes: 0 success, 1 runtime error, 2 usage error. Errors print one line: chessrl: error: <Category>: <message>.\n"
             "Every option can also be set with the environment variable shown, or in a JSON --config file\n"
             "(top-level keys for global options, one object per subcommand). Precedence: flags > env > file > defaults.");
  app.option_defaults()->always_capture_default();
  app.get_formatter()->column_width(36);
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  app.add_option("--seed", globals.seed, "Seed for every randomized step");
  app.add_option("--threads", globals.threads, "Worker threads for parallel kernels (0 = all cores, 1 = serial)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", globals.log_level, "Log verbosity on stderr")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--config", globals.config, "JSON config file")->envname("CHESSRL_CONFIG");

  Commands commands(globals, out, err, tables);
  commands.register_all(app);
  assign_env_names(app, "CHESSRL");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (!globals.config.empty()) {
      std::ifstream in(globals.config);
      if (!in) throw UsageError("cannot open config file " + globals.config);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("config file " + globals.config + ": " + e.what());
      }
      apply_config(app, j, "", true);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "chessrl: error: UsageError: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "chessrl: error: UsageError: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    parallel::set_thread_limit(globals.threads);
    return commands.dispatch(app);
  } catch (const UsageError& e) {
    err << "chessrl: error: UsageError: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << "chessrl: error: " << e.category() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "chessrl: error: InternalError: " << one_line(e.what()) << '\n';
    return 1;
  }
}

}  // namespace chessrl::cli
