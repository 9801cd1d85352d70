#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vortexflow/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gradient flow of the self-dual abelian Higgs energy on a flat torus"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  vflow::CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", common.sets, "Override a configuration key, key=value (repeatable)");
    sub->add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "Random seed (overrides init.seed)");
    sub->add_flag("--quiet", common.quiet, "Print only the summary line");
  };

  auto* run = app.add_subcommand("run", "Run one gradient flow");
  add_common(run);

  std::string snapshot;
  auto* diag = app.add_subcommand("diagnose", "Recompute diagnostics of a snapshot");
  diag->add_option("snapshot", snapshot, "Snapshot file")->required();

  std::string series_path, column = "eta_l2";
  std::optional<double> floor;
  auto* rates = app.add_subcommand("rates", "Fit an exponential decay rate to a series column");
  rates->add_option("series", series_path, "Series CSV file")->required();
  rates->add_option("--column", column, "Column to fit")->capture_default_str();
  rates->add_option("--floor", floor, "Ignore samples below this value (default 1e-12 * max)");

  std::string param = "L", values;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of flows and tabulate the outcomes");
  add_common(sweep);
  sweep->add_option("--param", param, "L, N, or any configuration key")->capture_default_str();
  sweep->add_option("--values", values, "Comma list or start:stop:step")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs (0 = hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vflow::kExitConfig;
  }

  if (run->parsed()) return vflow::cmd_run(common, std::cout, std::cerr);
  if (diag->parsed()) return vflow::cmd_diagnose(snapshot, std::cout, std::cerr);
  if (rates->parsed()) return vflow::cmd_rates(series_path, column, floor, std::cout, std::cerr);
  return vflow::cmd_sweep(common, param, values, jobs, std::cout, std::cerr);
}
