#include <iostream>

#include <CLI11.hpp>

#include "nstab/cli.hpp"

int main(int argc, char** argv) {
  using namespace nstab::cli;
  CLI::App app{"Stability analysis for scalar neutral delay equations"};
  app.require_subcommand(1);

  CommandArgs args;
  auto add_common = [&args](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "problem configuration (INI)")->required();
    sub->add_option("--out-dir", args.out_dir, "directory for output files");
    sub->add_option("--format", args.format, "csv or json");
    sub->add_option("--dt", args.dt, "integration step");
    sub->add_option("--horizon", args.horizon, "simulation end time");
    sub->add_option("--seed", args.seed, "seed for random histories");
  };

  auto* check = app.add_subcommand("check", "evaluate every applicable stability criterion");
  auto* simulate = app.add_subcommand("simulate", "integrate and estimate decay");
  auto* sweep = app.add_subcommand("sweep", "locate criterion thresholds over a parameter");
  auto* fund = app.add_subcommand("fundamental", "fundamental function X(t, s)");
  for (auto* sub : {check, simulate, sweep, fund}) add_common(sub);
  fund->add_option("--s", args.s, "start time s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (check->parsed()) return cmd_check(args, std::cout, std::cerr);
  if (simulate->parsed()) return cmd_simulate(args, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(args, std::cout, std::cerr);
  return cmd_fundamental(args, std::cout, std::cerr);
}
