// Command-line front end: runs the benchmark registry from JSON configs and
// writes CSV artifacts. Exit codes: 0 success, 2 config error, 3 solver
// failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pe/harness.hpp"

namespace {

pe::harness::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pe::harness::ConfigError("cannot open config file: " + path);
  pe::harness::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw pe::harness::ConfigError(std::string("config parse error: ") + e.what());
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral least-squares extension solvers: benchmark runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int jobs = 0;
  bool paper_scale = false;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Path to the experiment config")->required();
  run->add_option("--jobs", jobs, "Cap on parallel sweep tasks");
  run->add_option("--output", output_dir, "Output directory for CSV artifacts");
  run->add_flag("--paper-scale", paper_scale,
                "Full-resolution viscoelastic benchmark (needs tens of GB of memory)");

  auto* list = app.add_subcommand("list", "List the available problem keys");

  auto* validate = app.add_subcommand("validate", "Validate a config without running it");
  validate->add_option("config", config_path, "Path to the experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& key : pe::harness::registry_keys()) std::cout << key << "\n";
      return 0;
    }
    pe::harness::json user = load_json(config_path);
    if (jobs > 0) user["jobs"] = jobs;
    if (!output_dir.empty()) user["output"]["dir"] = output_dir;
    if (paper_scale) user["paper_scale"] = true;
    pe::harness::ExperimentConfig cfg = pe::harness::parse_config(user);
    if (validate->parsed()) {
      std::cout << "config ok: " << cfg.problem << "\n";
      return 0;
    }
    auto artifacts = pe::harness::run_experiment(cfg);
    for (const auto& f : artifacts.files) std::cout << "wrote " << f << "\n";
    return 0;
  } catch (const pe::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
}
