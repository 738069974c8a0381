// ktops: command-line runner for the kicked-top experiments.
//
//   ktops run <config|manifest.json> [--set section.key=value]... [--out DIR]
//   ktops sweep <config> ...
//   ktops fit <config> ...
//   ktops validate <config> ...
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kickedtop/config.hpp"
#include "kickedtop/experiment.hpp"
#include "kickedtop/output.hpp"

namespace kt = kickedtop;

namespace {

struct Args {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("config", a.config, "Experiment config (INI) or a run manifest (JSON)")->required();
  cmd->add_option("--set", a.overrides, "Override a config value, section.key=value")->take_all();
  cmd->add_option("--out", a.out, "Output directory (overrides experiment.output_dir)");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kt::ConfigError("file", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

kt::ExperimentConfig load(const Args& a) {
  const std::string text = slurp(a.config);
  const auto first = text.find_first_not_of(" \t\r\n");
  kt::ExperimentConfig c;
  if (first != std::string::npos && text[first] == '{') {
    kt::RunManifest m;
    try {
      m = kt::manifest_from_json(text);
    } catch (const std::exception& e) {
      throw kt::ConfigError("file", std::string("unreadable manifest: ") + e.what());
    }
    c = kt::parse_config(m.config_text);
  } else {
    c = kt::parse_config(text);
  }
  for (const auto& o : a.overrides) kt::apply_override(c, o);
  if (!a.out.empty()) c.output_dir = a.out;
  return c;
}

int execute(const std::string& command, const Args& a) {
  kt::ExperimentConfig c = load(a);
  if (command == "validate") {
    kt::validate(c);
    std::cout << "ok: " << kt::to_string(c.kind) << "\n";
    return kt::kExitOk;
  }
  const kt::RunOutcome r = kt::run_command(command, c);
  if (r.exit_code != kt::kExitOk) {
    std::cerr << "ktops: numerical failure: " << r.manifest.error << "\n"
              << "ktops: partial outputs in " << r.output_dir.string() << " are flagged incomplete\n";
  } else {
    std::cout << r.output_dir.string() << ": " << r.manifest.outputs.size() << " file(s) written\n";
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement production in coupled kicked tops"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kt::library_version());

  Args args;
  std::string chosen;
  for (const char* name : {"run", "sweep", "fit", "validate"}) {
    CLI::App* cmd = app.add_subcommand(name);
    add_common(cmd, args);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  app.get_subcommand("run")->description("Run one experiment (or re-run a manifest)");
  app.get_subcommand("sweep")->description("Run a sweep experiment (sweep-eps, sweep-k, weak-chaos-scan)");
  app.get_subcommand("fit")->description("Fit rate models to sweep output");
  app.get_subcommand("validate")->description("Check a config without running it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kt::kExitConfig;
  }

  try {
    return execute(chosen, args);
  } catch (const kt::ConfigError& e) {
    std::cerr << "ktops: config error: " << e.what() << "\n";
    return kt::kExitConfig;
  } catch (const kt::NumericalFailure& e) {
    std::cerr << "ktops: numerical failure: " << e.what() << "\n";
    return kt::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "ktops: " << e.what() << "\n";
    return 1;
  }
}
