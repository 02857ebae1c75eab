#pragma once

#include <functional>
#include <utility>

#include "mnlb/design.hpp"
#include "mnlb/environment.hpp"
#include "mnlb/trace.hpp"

namespace mnlb {

/// Exponentially growing batch lengths |T_beta| = floor(T^(1 - 2^-beta)),
/// truncated or absorbed so the cumulative boundaries end exactly at T.
struct BatchSchedule {
  std::vector<long> boundaries;  // cumulative end rounds, strictly increasing
  long T;

  static BatchSchedule make(long T, int M);

  int batches() const { return static_cast<int>(boundaries.size()); }
  long batch_end(int b) const { return boundaries[static_cast<std::size_t>(b)]; }
  long batch_start(int b) const {
    return b == 0 ? 1 : boundaries[static_cast<std::size_t>(b) - 1] + 1;
  }
};

/// ceil(log2 log2 T) + 1, the default number of policy updates.
int default_batch_count(long T);

/// Frozen per-batch estimate: everything later rounds need to score arms.
class BatchCheckpoint {
 public:
  BatchCheckpoint(ModelParams theta_hat, ScaledHessian h, DesignMatrixV v,
                  ConfidenceRadius gamma, int batch_index);

  const ModelParams& theta_hat() const { return theta_hat_; }
  const ScaledHessian& h() const { return h_; }
  const DesignMatrixV& v() const { return v_; }
  const ConfidenceRadius& gamma() const { return gamma_; }
  int batch_index() const { return batch_index_; }
  const Eigen::LLT<MatrixXd>& h_llt() const { return h_llt_; }

 private:
  ModelParams theta_hat_;
  ScaledHessian h_;
  DesignMatrixV v_;
  ConfidenceRadius gamma_;
  int batch_index_;
  Eigen::LLT<MatrixXd> h_llt_;
};

/// Exploration bonuses for the batched scorer:
///   eps1 = gamma * || H^{-1/2} (A(x, theta_hat) rho) kron x ||
///   eps2 = 3 gamma^2 ||rho|| lambda_max((I kron x^T) H^{-1} (I kron x))
std::pair<double, double> bonus_terms(const Arm& arm,
                                      const BatchCheckpoint& checkpoint,
                                      const RewardVector& rho);

/// UCB/LCB around the plug-in mean rho^T z(x, theta_hat).
std::pair<double, double> ucb_lcb(const Arm& arm,
                                  const BatchCheckpoint& checkpoint,
                                  const RewardVector& rho);

/// Indices of arms whose UCB strictly exceeds the best LCB. Never empty: a
/// round-off tie that would empty the set falls back to all indices with a
/// warning on stderr.
std::vector<int> eliminate_indices(const ArmSet& arms,
                                   const BatchCheckpoint& checkpoint,
                                   const RewardVector& rho);
ArmSet eliminate(const ArmSet& arms, const BatchCheckpoint& checkpoint,
                 const RewardVector& rho);

enum class LambdaPreset {
  standard,  // batched: sqrt(K d log T); rarely-switching: K d S^-1/2 log(T/delta)
  heavy,     // batched alternative: S^-1/2 K d log T
};

enum class RescaleMode {
  at_switch,  // historical B frozen against V at the latest switch round
  per_round,  // each record keeps the B computed when it was logged
};

struct AlgoConfig {
  double lambda_override = 0.0;  // > 0 replaces the preset entirely
  LambdaPreset lambda_preset = LambdaPreset::standard;
  double delta = 0.01;
  double C = 1.0;        // rarely-switching radius constant
  double c_gamma = 1.0;  // radius multiplier (1 = theory constants)
  double kappa = 0.0;    // > 0 fixes the curvature bound, else estimated
  int kappa_samples = 1000;
  double epsilon_design = 0.01;
  RescaleMode rescale_mode = RescaleMode::at_switch;
  MleOptions mle{};
};

double resolve_lambda_batched(const AlgoConfig& config, int K, int d, double S,
                              long T);
double resolve_lambda_rs(const AlgoConfig& config, int K, int d, double S,
                         long T, double delta);
KappaEstimate resolve_kappa(const AlgoConfig& config, const ArmSet& pool,
                            double S, int K, Rng& rng);

/// Batched successive-elimination run: per-round pruning through every prior
/// checkpoint, sampling from the design policy of the previous batch, and
/// exactly one fit + design computation per batch boundary.
RegretTrace bmnl_run(const Environment& env, long T, int M,
                     const RewardVector& rho, double S,
                     const AlgoConfig& config, Rng rng);

/// Rarely-switching state between policy updates.
struct RsState {
  RsState(int K, int d, double lambda, double S);

  ScaledHessian h_current;
  ScaledHessian h_at_switch;
  ModelParams theta_hat;
  long tau = 0;  // last switch round (0 = never)
  std::vector<InteractionRecord> history;
  std::vector<double> b_history;  // B value each record was logged with
  DesignMatrixV v;                // live, over all played arms
  DesignMatrixV v_at_switch;      // frozen copy from the last switch
  long switch_count = 0;
};

/// Determinant-doubling test: logdet(H_t) - logdet(H_tau) > log 2 (strict).
bool rs_should_switch(const RsState& state);

/// Rarely-switching bonuses against the live H_t:
///   eps1 = sqrt(2) gamma * || H^{-1/2} (A(x, theta_hat) rho) kron x ||
///   eps2 = 6 R gamma^2 lambda_max((I kron x^T) H^{-1} (I kron x))
std::pair<double, double> rs_bonus(const Arm& arm, const RsState& state,
                                   double gamma, const RewardVector& rho);

/// Optional observers for auditing internal state without re-running the
/// loop elsewhere. on_switch fires after a refit completes (round, state);
/// on_finish fires once after the last round.
struct RsHooks {
  std::function<void(long, const RsState&)> on_switch;
  std::function<void(long, const RsState&)> on_finish;
};

/// UCB argmax every round; refit + full H rebuild only when the determinant
/// has doubled since the last switch.
RegretTrace rsmnl_run(const Environment& env, long T, const RewardVector& rho,
                      double S, double delta, const AlgoConfig& config,
                      Rng rng, const RsHooks* hooks = nullptr);

/// Same loop with the switch predicate forced true: a per-round-update UCB
/// baseline with switch_count == T.
RegretTrace baseline_per_round_run(const Environment& env, long T,
                                   const RewardVector& rho, double S,
                                   double delta, const AlgoConfig& config,
                                   Rng rng, const RsHooks* hooks = nullptr);

/// Kd log2(1 + t / (lambda d)), the determinant-doubling switch budget.
double switch_bound(int d, int K, double lambda, double t);

}  // namespace mnlb
