#pragma once

#include <string>
#include <vector>

#include "mnlb/rng.hpp"

namespace mnlb {

struct TraceRow {
  long round;         // 1-based
  int arm_index;
  int outcome;        // 0..K
  double inst_regret;
  double cum_regret;
  bool is_switch;     // a policy update happened on this round
  double logdet_h;    // logdet of the scaled Hessian in force this round
};

/// Everything one simulated run produces: the per-round records, the summary
/// counters, and enough run bookkeeping to audit the theory-side invariants.
struct RegretTrace {
  std::vector<TraceRow> rows;

  // summary
  double total_regret = 0.0;
  long switch_count = 0;      // policy updates (M for batched, switches for RS)
  double wall_seconds = 0.0;

  // provenance
  std::string algorithm;
  std::uint64_t seed = 0;

  // resolved hyperparameters
  double lambda = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double delta = 0.0;

  std::vector<long> update_rounds;  // rounds flagged is_switch, in order

  // oracle-arm survival accounting (batched elimination only)
  long oracle_survived = 0;
  long oracle_total = 0;

  // max_t [sum_{s<=t} ||x_s||^2_{V_s^-1} - 2 d log(1 + t/(lambda_v d))]
  // accumulated online with lambda_v = max(1, lambda); <= 0 iff the
  // elliptical potential bound held at every prefix
  double elliptical_excess = 0.0;

  /// Structural checks: cumulative regret consistent and nondecreasing,
  /// instantaneous regret in [0, reward_bound], switch flags consistent
  /// with switch_count and update_rounds. Throws std::logic_error.
  void validate(double reward_bound) const;
};

}  // namespace mnlb
