#pragma once

#include <optional>

#include "mnlb/policies.hpp"

namespace mnlb {

enum class Algorithm { bmnl, rsmnl, baseline };

std::string to_string(Algorithm algo);
std::optional<Algorithm> parse_algorithm(const std::string& name);

struct RunResult {
  int seed_index;
  std::uint64_t seed;  // the derived per-run stream seed
  std::optional<RegretTrace> trace;
  std::string error;  // nonempty when the run failed
};

/// n_seeds independent runs on one instance. Per-seed streams are forked from
/// the master seed by index, so results are stable under adding seeds and
/// under any jobs count. Failures are captured per seed; siblings continue.
std::vector<RunResult> run_experiment(Algorithm algo,
                                      const EnvironmentSpec& spec, long T,
                                      int M, const AlgoConfig& config,
                                      int n_seeds, std::uint64_t master_seed,
                                      int jobs = 1);

struct AggregateRow {
  long round;
  double regret_mean;
  double regret_std;
  double regret_lo;  // mean - 2 std
  double regret_hi;  // mean + 2 std
  double switches_mean;
  double switches_std;
};

/// Population mean/std and mean +/- 2 std bands of cumulative regret and
/// cumulative policy updates at each checkpoint round (default every round).
std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces,
                                    std::vector<long> checkpoints = {});

}  // namespace mnlb
