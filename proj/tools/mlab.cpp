// mlab: batch experiment runner for the microlocal laboratory.
//
// Exit codes: 0 all verdicts pass, 1 verdict failure, 2 config parse or
// validation error, 3 hypothesis refusal.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "microloc/builtins.hpp"
#include "microloc/errors.hpp"
#include "microloc/experiments.hpp"
#include "microloc/report.hpp"

namespace fs = std::filesystem;
using microloc::Json;

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

std::string default_output_root() {
  const char* env = std::getenv("MLAB_OUTPUT_ROOT");
  return env ? std::string(env) : std::string("out");
}

int run_command(const std::string& config_path, std::string output_dir,
                long seed_override, const std::string& grid_override,
                bool verbose) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  Json config;
  try {
    config = Json::parse(text);
  } catch (const Json::parse_error& ex) {
    std::cerr << "error: " << config_path << ":"
              << line_of_offset(text, ex.byte) << ": " << ex.what() << "\n";
    return 2;
  }

  try {
    microloc::validate_top_level(config);
    if (seed_override >= 0) config["seed"] = seed_override;
    if (!grid_override.empty()) {
      auto x = grid_override.find('x');
      if (x == std::string::npos)
        throw microloc::ConfigError("--grid-override expects NxN");
      int n0 = std::stoi(grid_override.substr(0, x));
      int n1 = std::stoi(grid_override.substr(x + 1));
      if (n0 != n1)
        throw microloc::ConfigError(
            "--grid-override: only square grids are supported");
      config["grid"]["n"] = n0;
    }
    if (output_dir.empty()) {
      if (config.contains("output_dir"))
        output_dir = config["output_dir"].get<std::string>();
      else
        output_dir = (fs::path(default_output_root()) /
                      config["experiment"].get<std::string>())
                         .string();
    }

    bool ok = microloc::run_experiment(config, output_dir, verbose);

    Json manifest;
    manifest["config_hash"] = std::to_string(microloc::fnv64(text));
    manifest["library_version"] = "0.1.0";
    auto now = std::chrono::system_clock::now();
    manifest["timestamp"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            now.time_since_epoch())
            .count();
    microloc::write_text((fs::path(output_dir) / "manifest.json").string(),
                         manifest.dump(2) + "\n");

    if (verbose)
      std::cerr << (ok ? "all verdicts passed" : "verdict failure") << "; "
                << "artifacts in " << output_dir << "\n";
    return ok ? 0 : 1;
  } catch (const microloc::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const microloc::HypothesisError& ex) {
    std::cerr << "hypothesis refused: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microlocal laboratory experiment runner"};
  app.require_subcommand(1);

  std::string config_path, output_dir, grid_override;
  long seed_override = -1;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--output-dir", output_dir, "artifact directory");
  run->add_option("--seed-override", seed_override, "replace the config seed");
  run->add_option("--grid-override", grid_override, "grid size as NxN");
  run->add_flag("--verbose", verbose, "chatty progress output");

  auto* lb = app.add_subcommand("list-builtins",
                                "print symbols, solution families and "
                                "experiments with their parameters");

  CLI11_PARSE(app, argc, argv);

  if (lb->parsed()) {
    std::cout << microloc::builtins_catalog();
    return 0;
  }
  return run_command(config_path, output_dir, seed_override, grid_override,
                     verbose);
}
