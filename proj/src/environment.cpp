#include "mnlb/environment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mnlb/trace.hpp"

namespace mnlb {

std::string to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::stochastic_fixed_pool:
      return "stochastic-fixed-pool";
    case EnvironmentKind::stochastic_resampled:
      return "stochastic-resampled";
    case EnvironmentKind::adversarial_fresh:
      return "adversarial-fresh";
  }
  return "unknown";
}

std::optional<EnvironmentKind> parse_environment_kind(const std::string& name) {
  if (name == "stochastic-fixed-pool") {
    return EnvironmentKind::stochastic_fixed_pool;
  }
  if (name == "stochastic-resampled") {
    return EnvironmentKind::stochastic_resampled;
  }
  if (name == "adversarial-fresh") return EnvironmentKind::adversarial_fresh;
  return std::nullopt;
}

namespace {

ModelParams normalized_theta(ModelParams theta) {
  double n = theta.theta.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("EnvironmentSpec: theta_star must be nonzero");
  }
  theta.theta *= theta.S / n;
  return theta;
}

RewardVector normalized_rho(RewardVector rho) {
  double n = rho.rho.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("EnvironmentSpec: rho must be nonzero");
  }
  return RewardVector(rho.rho * (rho.R / n), rho.R);
}

}  // namespace

EnvironmentSpec::EnvironmentSpec(EnvironmentKind kind_in, int n_arms_in,
                                 ModelParams theta_star_in,
                                 RewardVector rho_in, std::uint64_t seed_in)
    : kind(kind_in),
      n_arms(n_arms_in),
      theta_star(normalized_theta(std::move(theta_star_in))),
      rho(normalized_rho(std::move(rho_in))),
      seed(seed_in) {
  if (n_arms < 1) throw std::invalid_argument("EnvironmentSpec: n_arms >= 1");
  if (rho.rho.size() != theta_star.K) {
    throw std::invalid_argument("EnvironmentSpec: rho dimension must equal K");
  }
}

EnvironmentSpec EnvironmentSpec::sample(EnvironmentKind kind, int K, int d,
                                        int n_arms, double S, double R,
                                        std::uint64_t seed) {
  Rng rng = Rng(seed).fork(0xA11CE);
  VectorXd theta = rng.uniform_in_cube(K * d, -1.0, 1.0);
  while (!(theta.norm() > 0.0)) theta = rng.uniform_in_cube(K * d, -1.0, 1.0);
  theta *= S / theta.norm();

  VectorXd rho = rng.uniform_in_cube(K, 0.0, 1.0);
  // a positive rescale keeps entries nonnegative; the guard only re-rolls the
  // measure-zero degenerate draws
  while (!(rho.norm() > 0.0) || rho.minCoeff() < 0.0) {
    rho = rng.uniform_in_cube(K, 0.0, 1.0);
  }
  rho *= R / rho.norm();

  return EnvironmentSpec(kind, n_arms, ModelParams(theta, K, d, S),
                         RewardVector(rho, R), seed);
}

Environment::Environment(EnvironmentSpec spec) : spec_(std::move(spec)) {
  Rng rng = Rng(spec_.seed).fork(0xB00F);
  pool_ = draw_set(rng);
}

ArmSet Environment::draw_set(Rng& rng) const {
  ArmSet arms;
  arms.reserve(spec_.n_arms);
  while (static_cast<int>(arms.size()) < spec_.n_arms) {
    VectorXd v = rng.uniform_in_cube(spec_.d(), -1.0, 1.0);
    if (!(v.norm() > 0.0)) continue;
    v /= v.norm();
    bool dup = false;
    for (const Arm& a : arms) {
      if (a.x() == v) {
        dup = true;
        break;
      }
    }
    if (!dup) arms.emplace_back(std::move(v));
  }
  return arms;
}

ArmSet Environment::context(long round) const {
  if (round < 1) throw std::invalid_argument("Environment: rounds are 1-based");
  switch (spec_.kind) {
    case EnvironmentKind::stochastic_fixed_pool:
      return pool_;
    case EnvironmentKind::stochastic_resampled: {
      Rng rng = Rng(spec_.seed).fork(static_cast<std::uint64_t>(round));
      return draw_set(rng);
    }
    case EnvironmentKind::adversarial_fresh: {
      // slow deterministic rotation of the base pool in the (0,1) plane;
      // 1-d instances flip sign instead
      ArmSet arms = pool_;
      if (spec_.d() == 1) {
        if (round % 2 == 0) {
          for (Arm& a : arms) a = Arm(-a.x());
        }
        return arms;
      }
      double phi = 2.0 * std::numbers::pi *
                   static_cast<double>(round % 997) / 997.0;
      double c = std::cos(phi), s = std::sin(phi);
      for (Arm& a : arms) {
        VectorXd v = a.x();
        double v0 = v(0), v1 = v(1);
        v(0) = c * v0 - s * v1;
        v(1) = s * v0 + c * v1;
        a = Arm(std::move(v));
      }
      return arms;
    }
  }
  throw std::logic_error("Environment: unknown kind");
}

OracleResult oracle_best(const ArmSet& context, const ModelParams& theta_star,
                         const RewardVector& rho) {
  if (context.empty()) {
    throw std::invalid_argument("oracle_best: empty context");
  }
  OracleResult best{0, expected_reward(context[0], theta_star, rho)};
  for (int i = 1; i < static_cast<int>(context.size()); ++i) {
    double v = expected_reward(context[static_cast<std::size_t>(i)],
                               theta_star, rho);
    if (v > best.value) best = {i, v};
  }
  return best;
}

void RegretTrace::validate(double reward_bound) const {
  auto fail = [](const char* msg) { throw std::logic_error(msg); };
  double cum = 0.0;
  long switches = 0;
  std::vector<long> flagged;
  long prev_round = 0;
  for (const TraceRow& row : rows) {
    if (row.round != prev_round + 1) fail("RegretTrace: rounds not contiguous");
    prev_round = row.round;
    if (row.inst_regret < -1e-9 || row.inst_regret > reward_bound + 1e-9) {
      fail("RegretTrace: instantaneous regret out of range");
    }
    cum += row.inst_regret;
    if (std::abs(row.cum_regret - cum) > 1e-6 * std::max(1.0, cum)) {
      fail("RegretTrace: cumulative regret inconsistent");
    }
    if (row.is_switch) {
      ++switches;
      flagged.push_back(row.round);
    }
  }
  if (switches != switch_count) fail("RegretTrace: switch_count mismatch");
  if (flagged != update_rounds) fail("RegretTrace: update_rounds mismatch");
  if (!rows.empty() &&
      std::abs(total_regret - rows.back().cum_regret) > 1e-6) {
    fail("RegretTrace: total_regret mismatch");
  }
}

}  // namespace mnlb
