// Command-line front end: run, list and validate scenario files.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "finsler/config.hpp"
#include "finsler/runner.hpp"

#ifndef FINSLER_SCENARIO_DIR
#define FINSLER_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> bundled(const std::string& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".yaml") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// A bare scenario name resolves against the bundled directory.
std::string resolve(const std::string& arg, const std::string& dir) {
  if (fs::exists(arg)) return arg;
  const fs::path p = fs::path(dir) / (arg + ".yaml");
  if (fs::exists(p)) return p.string();
  return arg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler measure-space laboratory"};
  app.require_subcommand(1);
  std::string scenario_dir = FINSLER_SCENARIO_DIR;
  app.add_option("--scenarios", scenario_dir, "Directory of bundled scenarios");

  auto* run = app.add_subcommand("run", "Run a scenario file or bundled scenario name");
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  double h = 0;
  int threads = 1;
  bool timestamps = false;
  run->add_option("config", config, "Scenario YAML path or bundled name")->required();
  auto* out_opt = run->add_option("--out", out, "Output directory (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides the config)");
  auto* h_opt = run->add_option("--mesh-size", h, "Mesh size h (overrides the config)")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads for suite jobs")->check(CLI::Range(1, 256));
  run->add_flag("--timestamps", timestamps, "Record the generation time in manifest.json");

  auto* list = app.add_subcommand("list", "List bundled scenarios");

  auto* validate = app.add_subcommand("validate", "Parse a scenario without running it");
  std::string vconfig;
  validate->add_option("config", vconfig, "Scenario YAML path or bundled name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*list) {
      const auto files = bundled(scenario_dir);
      for (const auto& f : files) {
        const auto c = finsler::load_scenario(f.string());
        std::cout << c.name << std::string(c.name.size() < 20 ? 20 - c.name.size() : 1, ' ') << c.description << '\n';
      }
      if (files.empty()) std::cerr << "no scenarios in " << scenario_dir << '\n';
      return 0;
    }
    if (*validate) {
      const auto path = resolve(vconfig, scenario_dir);
      const auto c = finsler::load_scenario(path);
      std::cout << path << ": ok (" << c.name << ", " << c.experiments.size() << " experiments:";
      for (const auto& e : c.experiments) std::cout << ' ' << e.name;
      std::cout << ")\n";
      return 0;
    }
    const auto path = resolve(config, scenario_dir);
    const auto c = finsler::load_scenario(path);
    finsler::RunOptions opt;
    opt.config_path = path;
    if (*out_opt) opt.out = out;
    if (*seed_opt) opt.seed = seed;
    if (*h_opt) opt.h = h;
    opt.threads = threads;
    opt.timestamps = timestamps;
    const auto r = finsler::run_scenario(c, opt);
    for (const auto& o : r.outcomes) {
      const char* status = !o.error.empty() ? "ERROR" : (!o.failures.empty() || !o.red_flags.empty()) ? "FLAGGED" : "ok";
      std::printf("%-8s %-12s %7.2f s\n", status, o.name.c_str(), o.seconds);
      if (!o.error.empty()) std::cerr << o.name << ": " << o.error << '\n';
    }
    std::cout << "artifacts in " << r.out_dir << "\n";
    return r.exit_code;
  } catch (const finsler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
