/// @file polytherm_main.cpp
/// @brief Command-line driver: run, check, study, energy-report.

#include <CLI11.hpp>

#include <iostream>

#include "polytherm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variational time stepping for adiabatic polyconvex "
               "thermoelasticity on the periodic 3-torus"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path;
  int workers = 1;
  unsigned long long seed = 12345;

  auto* run = app.add_subcommand("run", "march a configured simulation and "
                                        "emit energy/drift/solver ledgers");
  run->add_option("--config", config_path, "configuration file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--workers", workers, "worker threads for pointwise loops");

  auto* check = app.add_subcommand(
      "check", "run the randomized invariant suite and print margins");
  check->add_option("--seed", seed, "seed for the randomized invariants");
  check->add_option("--workers", workers, "worker threads");

  auto* study = app.add_subcommand(
      "study", "h- and dx-refinement studies with convergence verdicts");
  study->add_option("--config", config_path, "configuration file")->required();
  study->add_option("--out", out_dir, "output directory (overrides config)");
  study->add_option("--workers", workers, "worker threads");

  auto* report = app.add_subcommand(
      "energy-report", "re-emit CSV ledgers from a checkpoint");
  report->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  report->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      polytherm::RunConfig cfg = polytherm::parse_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (run->count("--workers")) cfg.workers = workers;
      return polytherm::cmd_run(cfg, std::cout);
    }
    if (check->parsed())
      return polytherm::cmd_check(seed, workers, std::cout);
    if (study->parsed()) {
      polytherm::RunConfig cfg = polytherm::parse_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (study->count("--workers")) cfg.workers = workers;
      return polytherm::cmd_study(cfg, std::cout);
    }
    if (report->parsed())
      return polytherm::cmd_energy_report(checkpoint_path, out_dir, std::cout);
  } catch (const polytherm::ConfigError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 2;
}
