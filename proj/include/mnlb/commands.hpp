#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mnlb/artifacts.hpp"
#include "mnlb/verify.hpp"

namespace mnlb {

/// Exit-code contract shared by all subcommands.
enum ExitCode {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitInvariant = 3,
};

struct CliOptions {
  std::string config_path;                // --config
  std::string out_override;               // --out (beats env and config)
  int jobs = 1;                           // --jobs
  std::string suite = "all";              // --suite
  std::uint64_t seed = 42;                // --seed (verify)
  double switch_budget_factor = 1.0;      // verify tamper hook
  std::vector<std::string> report_dirs;   // report inputs
  std::string report_out;                 // report output directory
};

/// Output root: --out flag, then the MNLB_OUT_ROOT env var, then the
/// config's [output] dir.
std::filesystem::path resolve_out_root(const ExperimentConfig& cfg,
                                       const std::string& out_override);

/// Executes one pinned (algorithm, T) cell into dir: per-seed trace CSVs,
/// aggregate.csv over the seeds that succeeded, manifest.ini last. Returns
/// kExitOk or kExitRuntime (some seeds failed; manifest flags them).
int run_cell(const ExperimentConfig& cell_cfg, const std::filesystem::path& dir,
             int jobs);

int cmd_run(const CliOptions& opt);
int cmd_sweep(const CliOptions& opt);
int cmd_report(const CliOptions& opt);
int cmd_verify(const CliOptions& opt);

}  // namespace mnlb
