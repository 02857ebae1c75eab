#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mnlb/harness.hpp"

namespace mnlb {

/// Validation failure that names the offending config field.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field_in, const std::string& msg)
      : std::runtime_error(field_in + ": " + msg), field(std::move(field_in)) {}
  std::string field;
};

/// One experiment description: flat sections of key = value pairs.
/// experiment.algorithm and experiment.T are grid axes (comma-separated);
/// a single run requires both to be singletons, a sweep crosses them.
struct ExperimentConfig {
  // [experiment]
  std::vector<Algorithm> algorithms;
  std::vector<long> T_grid;
  int n_seeds = 10;
  std::uint64_t master_seed = 1;

  // [environment]
  EnvironmentKind kind = EnvironmentKind::stochastic_fixed_pool;
  int K = 0;
  int d = 0;
  int n_arms = 0;
  double S = 0.0;
  double R = 0.0;
  std::uint64_t instance_seed = 1;

  // [algorithm]
  AlgoConfig algo;  // lambda_override <= 0 means "auto"
  int M = 0;        // <= 0 means "auto" (ceil(log2 log2 T) + 1)

  // [output]
  std::string out_dir = "out";

  static ExperimentConfig parse_string(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path);

  /// Field-level checks; throws ConfigError naming the field.
  void validate() const;

  /// True when both grid axes are singletons.
  bool single_cell() const {
    return algorithms.size() == 1 && T_grid.size() == 1;
  }

  /// Copy with the grid pinned to one (algorithm, T) cell.
  ExperimentConfig cell(Algorithm algo_in, long T_in) const;

  /// Deterministic round-trippable echo of every resolved field.
  std::string canonical() const;

  /// Environment instance this config describes.
  EnvironmentSpec environment_spec() const;
};

}  // namespace mnlb
