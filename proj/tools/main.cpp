#include <iostream>

#include <CLI11.hpp>

#include "mnlb/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "mnlb: multinomial-logit contextual bandit simulator with batched and "
      "rarely-switching policies"};
  app.require_subcommand(1);

  mnlb::CliOptions opt;

  CLI::App* run =
      app.add_subcommand("run", "execute one experiment cell from a config");
  run->add_option("--config", opt.config_path, "experiment config file")
      ->required();
  run->add_option("--out", opt.out_override,
                  "output root (overrides MNLB_OUT_ROOT and the config)");
  run->add_option("--jobs", opt.jobs, "parallel per-seed workers")
      ->check(CLI::PositiveNumber);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "cross the config's algorithm x T grid, one directory per cell");
  sweep->add_option("--config", opt.config_path, "experiment config file")
      ->required();
  sweep->add_option("--out", opt.out_override,
                    "output root (overrides MNLB_OUT_ROOT and the config)");
  sweep->add_option("--jobs", opt.jobs, "parallel per-seed workers")
      ->check(CLI::PositiveNumber);

  CLI::App* report = app.add_subcommand(
      "report", "re-aggregate finished run directories into charts and CSV");
  report->add_option("dirs", opt.report_dirs, "run directories")->required();
  report->add_option("--out", opt.report_out, "report output directory")
      ->required();

  CLI::App* verify =
      app.add_subcommand("verify", "run deterministic invariant check suites");
  verify->add_option("--suite", opt.suite,
                     "one of core, estimation, design, policies, all");
  verify->add_option("--seed", opt.seed, "seed for the checks");
  verify
      ->add_option("--switch-budget-factor", opt.switch_budget_factor,
                   "scale the switch-count budget (negative-testing hook)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? mnlb::kExitOk : mnlb::kExitValidation;
  }

  try {
    if (run->parsed()) return mnlb::cmd_run(opt);
    if (sweep->parsed()) return mnlb::cmd_sweep(opt);
    if (report->parsed()) return mnlb::cmd_report(opt);
    if (verify->parsed()) return mnlb::cmd_verify(opt);
  } catch (const std::exception& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return mnlb::kExitRuntime;
  }
  return mnlb::kExitValidation;
}
