#pragma once

#include <optional>
#include <string>

#include "mnlb/mnl.hpp"

namespace mnlb {

enum class EnvironmentKind {
  stochastic_fixed_pool,  // one arm pool drawn up front, presented every round
  stochastic_resampled,   // a fresh i.i.d. arm set every round
  adversarial_fresh,      // deterministic drifting sets (rarely-switching only)
};

std::string to_string(EnvironmentKind kind);
std::optional<EnvironmentKind> parse_environment_kind(const std::string& name);

/// A fully-specified bandit instance: problem shape, ground truth, and the
/// seed that determines every arm set. theta_star is renormalized to norm
/// exactly S on construction, rho to norm exactly R.
struct EnvironmentSpec {
  EnvironmentSpec(EnvironmentKind kind, int n_arms, ModelParams theta_star,
                  RewardVector rho, std::uint64_t seed);

  /// Draw an instance: theta uniform on the cube then scaled to the S-sphere,
  /// rho uniform on [0,1]^K then scaled to the R-sphere (entries stay >= 0).
  static EnvironmentSpec sample(EnvironmentKind kind, int K, int d, int n_arms,
                                double S, double R, std::uint64_t seed);

  EnvironmentKind kind;
  int n_arms;
  ModelParams theta_star;
  RewardVector rho;
  std::uint64_t seed;

  int K() const { return theta_star.K; }
  int d() const { return theta_star.d; }
  double S() const { return theta_star.S; }
  double R() const { return rho.R; }
};

/// Deterministic arm-set source: spec + round fully determine the context.
class Environment {
 public:
  explicit Environment(EnvironmentSpec spec);

  const EnvironmentSpec& spec() const { return spec_; }

  /// Arm set presented at a (1-based) round.
  ArmSet context(long round) const;

  /// The base arm pool (the fixed pool itself for stochastic-fixed-pool;
  /// a representative draw otherwise). Used for curvature probing.
  const ArmSet& pool() const { return pool_; }

 private:
  ArmSet draw_set(Rng& rng) const;

  EnvironmentSpec spec_;
  ArmSet pool_;
};

struct OracleResult {
  int index;
  double value;
};

/// Exhaustive argmax of the expected reward; lowest index wins ties.
OracleResult oracle_best(const ArmSet& context, const ModelParams& theta_star,
                         const RewardVector& rho);

}  // namespace mnlb
