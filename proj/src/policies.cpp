#include "mnlb/policies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace mnlb {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    int j = rng.uniform_int(i + 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(j)]);
  }
}

struct BonusCore {
  double h_inv_norm;  // || H^{-1/2} ((A rho) kron x) ||
  double slice_eig;   // lambda_max((I kron x^T) H^{-1} (I kron x))
};

BonusCore bonus_core(const Eigen::LLT<MatrixXd>& llt,
                     const ModelParams& theta_hat, const Arm& arm,
                     const RewardVector& rho) {
  const int K = theta_hat.K, d = theta_hat.d;
  MatrixXd a = link_gradient(arm, theta_hat);
  VectorXd u = kron_vec(a * rho.rho, arm.x());
  double q = u.dot(llt.solve(u));
  MatrixXd w = MatrixXd::Zero(K * d, K);
  for (int i = 0; i < K; ++i) w.col(i).segment(i * d, d) = arm.x();
  MatrixXd m = w.transpose() * llt.solve(w);
  return {std::sqrt(std::max(0.0, q)), std::max(0.0, max_eig_sym(m))};
}

}  // namespace

BatchSchedule BatchSchedule::make(long T, int M) {
  require(T >= 2, "BatchSchedule: T >= 2 required");
  require(M >= 1, "BatchSchedule: M >= 1 required");
  std::vector<long> boundaries;
  long cum = 0;
  for (int beta = 1; beta <= M && cum < T; ++beta) {
    double expo = 1.0 - std::pow(2.0, -beta);
    long len = static_cast<long>(
        std::floor(std::pow(static_cast<double>(T), expo) + 1e-9));
    if (len < 1) len = 1;
    cum = std::min(T, cum + len);
    boundaries.push_back(cum);
  }
  boundaries.back() = T;  // the final batch absorbs any remainder
  return {std::move(boundaries), T};
}

int default_batch_count(long T) {
  require(T >= 2, "default_batch_count: T >= 2 required");
  double inner = std::log2(static_cast<double>(T));
  return static_cast<int>(std::ceil(std::log2(inner))) + 1;
}

BatchCheckpoint::BatchCheckpoint(ModelParams theta_hat, ScaledHessian h,
                                 DesignMatrixV v, ConfidenceRadius gamma,
                                 int batch_index)
    : theta_hat_(std::move(theta_hat)),
      h_(std::move(h)),
      v_(std::move(v)),
      gamma_(gamma),
      batch_index_(batch_index) {
  h_llt_.compute(h_.matrix());
  if (h_llt_.info() != Eigen::Success) {
    throw std::invalid_argument("BatchCheckpoint: H is not positive definite");
  }
}

std::pair<double, double> bonus_terms(const Arm& arm,
                                      const BatchCheckpoint& checkpoint,
                                      const RewardVector& rho) {
  BonusCore core = bonus_core(checkpoint.h_llt(), checkpoint.theta_hat(), arm,
                              rho);
  double g = checkpoint.gamma().gamma;
  double eps1 = g * core.h_inv_norm;
  double eps2 = 3.0 * g * g * rho.rho.norm() * core.slice_eig;
  return {eps1, eps2};
}

std::pair<double, double> ucb_lcb(const Arm& arm,
                                  const BatchCheckpoint& checkpoint,
                                  const RewardVector& rho) {
  auto [eps1, eps2] = bonus_terms(arm, checkpoint, rho);
  double mean = expected_reward(arm, checkpoint.theta_hat(), rho);
  return {mean + eps1 + eps2, mean - eps1 - eps2};
}

std::vector<int> eliminate_indices(const ArmSet& arms,
                                   const BatchCheckpoint& checkpoint,
                                   const RewardVector& rho) {
  require(!arms.empty(), "eliminate: empty arm set");
  const int n = static_cast<int>(arms.size());
  std::vector<double> ucb(static_cast<std::size_t>(n));
  std::vector<double> lcb(static_cast<std::size_t>(n));
  double max_lcb = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    auto [u, l] = ucb_lcb(arms[static_cast<std::size_t>(i)], checkpoint, rho);
    ucb[static_cast<std::size_t>(i)] = u;
    lcb[static_cast<std::size_t>(i)] = l;
    max_lcb = std::max(max_lcb, l);
  }
  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (ucb[static_cast<std::size_t>(i)] > max_lcb) kept.push_back(i);
  }
  if (kept.empty()) {
    // ucb >= lcb makes this reachable only through exact round-off ties
    std::cerr << "mnlb: warning: elimination tie emptied the arm set; "
                 "keeping all arms\n";
    kept.resize(static_cast<std::size_t>(n));
    std::iota(kept.begin(), kept.end(), 0);
  }
  return kept;
}

ArmSet eliminate(const ArmSet& arms, const BatchCheckpoint& checkpoint,
                 const RewardVector& rho) {
  ArmSet out;
  for (int i : eliminate_indices(arms, checkpoint, rho)) {
    out.push_back(arms[static_cast<std::size_t>(i)]);
  }
  return out;
}

double resolve_lambda_batched(const AlgoConfig& config, int K, int d, double S,
                              long T) {
  if (config.lambda_override > 0.0) return config.lambda_override;
  require(T >= 2, "resolve_lambda_batched: T >= 2 required");
  double kd = static_cast<double>(K) * d;
  double logT = std::log(static_cast<double>(T));
  switch (config.lambda_preset) {
    case LambdaPreset::standard:
      return std::sqrt(kd * logT);
    case LambdaPreset::heavy:
      return kd * logT / std::sqrt(S);
  }
  throw std::logic_error("resolve_lambda_batched: unknown preset");
}

double resolve_lambda_rs(const AlgoConfig& config, int K, int d, double S,
                         long T, double delta) {
  if (config.lambda_override > 0.0) return config.lambda_override;
  require(delta > 0.0 && delta < 1.0, "resolve_lambda_rs: delta in (0,1)");
  require(static_cast<double>(T) / delta > 1.0,
          "resolve_lambda_rs: T/delta > 1 required");
  double kd = static_cast<double>(K) * d;
  return kd * std::log(static_cast<double>(T) / delta) / std::sqrt(S);
}

KappaEstimate resolve_kappa(const AlgoConfig& config, const ArmSet& pool,
                            double S, int K, Rng& rng) {
  if (config.kappa > 0.0) return {config.kappa, false};
  return estimate_kappa({pool}, S, K, config.kappa_samples, rng);
}

RegretTrace bmnl_run(const Environment& env, long T, int M,
                     const RewardVector& rho, double S,
                     const AlgoConfig& config, Rng rng) {
  auto t0 = std::chrono::steady_clock::now();
  require(env.spec().kind != EnvironmentKind::adversarial_fresh,
          "bmnl_run: adversarial contexts are not supported");
  require(T >= 2, "bmnl_run: T >= 2 required");
  const ModelParams& theta_star = env.spec().theta_star;
  const int K = theta_star.K, d = theta_star.d;

  double lambda = resolve_lambda_batched(config, K, d, S, T);
  Rng kappa_rng = rng.fork(1);
  KappaEstimate kap = resolve_kappa(config, env.pool(), S, K, kappa_rng);
  ConfidenceRadius gamma = confidence_radius_batched(
      S, K, d, static_cast<double>(T), lambda, config.c_gamma);

  BatchSchedule schedule = BatchSchedule::make(T, M);
  GOptimalOptions gopts{config.epsilon_design, 1000};

  RegretTrace trace;
  trace.algorithm = "bmnl";
  trace.seed = rng.seed();
  trace.lambda = lambda;
  trace.gamma = gamma.gamma;
  trace.kappa = kap.kappa;
  trace.delta = config.delta;
  trace.elliptical_excess = -std::numeric_limits<double>::infinity();
  trace.rows.reserve(static_cast<std::size_t>(T));

  std::vector<BatchCheckpoint> checkpoints;
  std::shared_ptr<const ArmSelectionPolicy> policy =
      std::make_shared<GOptimalPerSetPolicy>(gopts);

  DesignMatrixV v_ell(d, std::max(1.0, lambda));
  double ell_sum = 0.0;

  Rng play = rng.fork(2);
  std::uint64_t design_stream = 0;
  VectorXd warm = VectorXd::Zero(K * d);

  std::vector<InteractionRecord> batch_records;
  std::vector<ArmSet> batch_pruned;
  double cum_regret = 0.0;
  int b = 0;

  for (long t = 1; t <= T; ++t) {
    if (t > schedule.batch_end(b)) ++b;
    ArmSet context = env.context(t);
    OracleResult oracle = oracle_best(context, theta_star, rho);

    // successive elimination through every completed batch's checkpoint
    ArmSet pruned = context;
    std::vector<int> alive(pruned.size());
    std::iota(alive.begin(), alive.end(), 0);
    for (const BatchCheckpoint& cp : checkpoints) {
      std::vector<int> kept = eliminate_indices(pruned, cp, rho);
      ArmSet next;
      std::vector<int> alive_next;
      next.reserve(kept.size());
      alive_next.reserve(kept.size());
      for (int k : kept) {
        next.push_back(pruned[static_cast<std::size_t>(k)]);
        alive_next.push_back(alive[static_cast<std::size_t>(k)]);
      }
      pruned = std::move(next);
      alive = std::move(alive_next);
    }
    ++trace.oracle_total;
    if (std::find(alive.begin(), alive.end(), oracle.index) != alive.end()) {
      ++trace.oracle_survived;
    }

    int pick = sample_arm(*policy, pruned, play);
    const Arm arm = pruned[static_cast<std::size_t>(pick)];
    int outcome = sample_outcome(arm, theta_star, play);
    double inst = oracle.value - expected_reward(arm, theta_star, rho);
    cum_regret += inst;

    double nrm = v_ell.inv_norm(arm.x());
    ell_sum += nrm * nrm;
    v_ell.add(arm.x());
    double ell_bound =
        2.0 * d *
        std::log(1.0 + static_cast<double>(t) / (v_ell.lambda() * d));
    trace.elliptical_excess =
        std::max(trace.elliptical_excess, ell_sum - ell_bound);

    batch_records.push_back({arm, outcome, t});
    batch_pruned.push_back(pruned);

    bool boundary = (t == schedule.batch_end(b));
    if (boundary) {
      // split the batch in half; odd length gives the estimation half the
      // extra round
      std::vector<int> perm(static_cast<int>(batch_records.size()));
      std::iota(perm.begin(), perm.end(), 0);
      shuffle_indices(perm, play);
      std::size_t n_fit = (batch_records.size() + 1) / 2;
      std::vector<InteractionRecord> fit_records;
      fit_records.reserve(n_fit);
      for (std::size_t i = 0; i < n_fit; ++i) {
        fit_records.push_back(
            batch_records[static_cast<std::size_t>(perm[i])]);
      }

      MleResult fit =
          fit_mle(fit_records, K, d, S, lambda, config.mle, &warm);
      if (!fit.converged) {
        throw SolverFailure("bmnl_run: MLE did not converge at round " +
                                std::to_string(t),
                            fit.grad_norm, fit.iterations);
      }
      warm = fit.params.theta;

      DesignMatrixV v_b(d, lambda);
      for (const auto& rec : fit_records) v_b.add(rec.arm.x());
      SelfConcordanceScaler scaler{gamma.gamma, kap.kappa, v_b, S,
                                   ScalingVariant::batched};
      std::vector<double> bvals;
      bvals.reserve(fit_records.size());
      for (const auto& rec : fit_records) bvals.push_back(scaler.b(rec.arm.x()));
      ScaledHessian h_b =
          build_scaled_hessian(fit_records, fit.params, lambda, bvals);
      checkpoints.emplace_back(fit.params, std::move(h_b), v_b, gamma, b + 1);

      // design contexts: the held-out half's pruned sets, re-pruned through
      // the fresh checkpoint (falls back to the whole batch if the half is
      // empty, which only happens for length-1 batches)
      std::vector<ArmSet> design_sets;
      for (std::size_t i = n_fit; i < batch_records.size(); ++i) {
        design_sets.push_back(eliminate(
            batch_pruned[static_cast<std::size_t>(perm[i])],
            checkpoints.back(), rho));
      }
      if (design_sets.empty()) {
        for (const ArmSet& s : batch_pruned) {
          design_sets.push_back(eliminate(s, checkpoints.back(), rho));
        }
      }
      policy = mnl_design_policy(design_sets, fit.params, scaler, gopts,
                                 rng.fork(100 + design_stream++));

      batch_records.clear();
      batch_pruned.clear();
      trace.update_rounds.push_back(t);
      ++trace.switch_count;
    }

    double logdet_h = checkpoints.empty()
                          ? K * d * std::log(lambda)
                          : checkpoints.back().h().logdet();
    trace.rows.push_back({t, alive[static_cast<std::size_t>(pick)], outcome,
                          inst, cum_regret, boundary, logdet_h});
  }

  trace.total_regret = cum_regret;
  trace.wall_seconds = elapsed_seconds(t0);
  return trace;
}

RsState::RsState(int K, int d, double lambda, double S)
    : h_current(K, d, lambda, HessianKind::proxy),
      h_at_switch(K, d, lambda, HessianKind::proxy),
      theta_hat(VectorXd::Zero(K * d), K, d, S),
      v(d, lambda),
      v_at_switch(d, lambda) {}

bool rs_should_switch(const RsState& state) {
  return state.h_current.logdet() - state.h_at_switch.logdet() >
         std::log(2.0);
}

std::pair<double, double> rs_bonus(const Arm& arm, const RsState& state,
                                   double gamma, const RewardVector& rho) {
  Eigen::LLT<MatrixXd> llt(state.h_current.matrix());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("rs_bonus: H is not positive definite");
  }
  BonusCore core = bonus_core(llt, state.theta_hat, arm, rho);
  double eps1 = std::sqrt(2.0) * gamma * core.h_inv_norm;
  double eps2 = 6.0 * rho.R * gamma * gamma * core.slice_eig;
  return {eps1, eps2};
}

namespace {

RegretTrace rs_core(const Environment& env, long T, const RewardVector& rho,
                    double S, double delta, const AlgoConfig& config, Rng rng,
                    bool always_switch, const char* name,
                    const RsHooks* hooks) {
  auto t0 = std::chrono::steady_clock::now();
  require(T >= 2, "rsmnl_run: T >= 2 required");
  const ModelParams& theta_star = env.spec().theta_star;
  const int K = theta_star.K, d = theta_star.d;

  double lambda = resolve_lambda_rs(config, K, d, S, T, delta);
  Rng kappa_rng = rng.fork(1);
  KappaEstimate kap = resolve_kappa(config, env.pool(), S, K, kappa_rng);
  ConfidenceRadius gamma = confidence_radius_rs(
      S, K, d, static_cast<double>(T), delta, config.C, config.c_gamma);

  RegretTrace trace;
  trace.algorithm = name;
  trace.seed = rng.seed();
  trace.lambda = lambda;
  trace.gamma = gamma.gamma;
  trace.kappa = kap.kappa;
  trace.delta = delta;
  trace.elliptical_excess = -std::numeric_limits<double>::infinity();
  trace.rows.reserve(static_cast<std::size_t>(T));

  RsState state(K, d, lambda, S);
  DesignMatrixV v_ell(d, std::max(1.0, lambda));
  double ell_sum = 0.0;
  Rng play = rng.fork(2);
  VectorXd warm = VectorXd::Zero(K * d);
  double cum_regret = 0.0;

  for (long t = 1; t <= T; ++t) {
    bool switched = always_switch || rs_should_switch(state);
    if (switched) {
      state.tau = t;
      ++state.switch_count;
      MleResult fit =
          fit_mle(state.history, K, d, S, lambda, config.mle, &warm);
      if (!fit.converged) {
        throw SolverFailure(std::string(name) +
                                ": MLE did not converge at round " +
                                std::to_string(t),
                            fit.grad_norm, fit.iterations);
      }
      warm = fit.params.theta;
      state.theta_hat = fit.params;
      state.v_at_switch = state.v;

      std::vector<double> bvals;
      bvals.reserve(state.history.size());
      if (config.rescale_mode == RescaleMode::per_round) {
        bvals = state.b_history;
      } else {
        for (const auto& rec : state.history) {
          bvals.push_back(scaling_factor(rec.arm.x(), gamma.gamma, kap.kappa,
                                         state.v_at_switch, S,
                                         ScalingVariant::rarely_switching));
        }
      }
      state.h_current =
          build_scaled_hessian(state.history, state.theta_hat, lambda, bvals);
      state.h_at_switch = state.h_current;
      if (hooks && hooks->on_switch) hooks->on_switch(t, state);
    }

    ArmSet context = env.context(t);
    OracleResult oracle = oracle_best(context, theta_star, rho);

    Eigen::LLT<MatrixXd> llt(state.h_current.matrix());
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error(std::string(name) +
                               ": H lost positive definiteness");
    }
    int pick = 0;
    double best_ucb = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(context.size()); ++i) {
      const Arm& arm = context[static_cast<std::size_t>(i)];
      BonusCore core = bonus_core(llt, state.theta_hat, arm, rho);
      double ucb = expected_reward(arm, state.theta_hat, rho) +
                   std::sqrt(2.0) * gamma.gamma * core.h_inv_norm +
                   6.0 * rho.R * gamma.gamma * gamma.gamma * core.slice_eig;
      if (ucb > best_ucb) {  // strict: lowest index wins ties
        best_ucb = ucb;
        pick = i;
      }
    }

    const Arm arm = context[static_cast<std::size_t>(pick)];
    int outcome = sample_outcome(arm, theta_star, play);
    double inst = oracle.value - expected_reward(arm, theta_star, rho);
    cum_regret += inst;

    double nrm = v_ell.inv_norm(arm.x());
    ell_sum += nrm * nrm;
    v_ell.add(arm.x());
    double ell_bound =
        2.0 * d *
        std::log(1.0 + static_cast<double>(t) / (v_ell.lambda() * d));
    trace.elliptical_excess =
        std::max(trace.elliptical_excess, ell_sum - ell_bound);

    const DesignMatrixV& b_ref = config.rescale_mode == RescaleMode::at_switch
                                     ? state.v_at_switch
                                     : state.v;
    double bt = scaling_factor(arm.x(), gamma.gamma, kap.kappa, b_ref, S,
                               ScalingVariant::rarely_switching);
    state.history.push_back({arm, outcome, t});
    state.b_history.push_back(bt);
    state.v.add(arm.x());
    state.h_current.add_term(link_gradient(arm, state.theta_hat), arm.x(), bt);

    if (switched) trace.update_rounds.push_back(t);
    trace.rows.push_back({t, pick, outcome, inst, cum_regret, switched,
                          state.h_current.logdet()});
  }

  trace.total_regret = cum_regret;
  trace.switch_count = state.switch_count;
  trace.wall_seconds = elapsed_seconds(t0);
  if (hooks && hooks->on_finish) hooks->on_finish(T, state);
  return trace;
}

}  // namespace

RegretTrace rsmnl_run(const Environment& env, long T, const RewardVector& rho,
                      double S, double delta, const AlgoConfig& config,
                      Rng rng, const RsHooks* hooks) {
  return rs_core(env, T, rho, S, delta, config, rng, false, "rsmnl", hooks);
}

RegretTrace baseline_per_round_run(const Environment& env, long T,
                                   const RewardVector& rho, double S,
                                   double delta, const AlgoConfig& config,
                                   Rng rng, const RsHooks* hooks) {
  return rs_core(env, T, rho, S, delta, config, rng, true, "baseline", hooks);
}

double switch_bound(int d, int K, double lambda, double t) {
  require(d >= 1 && K >= 1 && lambda > 0.0 && t >= 0.0,
          "switch_bound: positive inputs required");
  return static_cast<double>(K) * d * std::log2(1.0 + t / (lambda * d));
}

}  // namespace mnlb
