#include "mnlb/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mnlb/artifacts.hpp"
#include "mnlb/harness.hpp"

namespace mnlb {

bool VerifyReport::all_pass() const {
  for (const CheckResult& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

int VerifyReport::failures() const {
  int n = 0;
  for (const CheckResult& c : checks) n += c.pass ? 0 : 1;
  return n;
}

namespace {

void push(std::vector<CheckResult>& out, const std::string& name,
          double tolerance, double observed) {
  out.push_back({name, tolerance, observed, observed <= tolerance});
}

Arm random_unit_arm(int d, Rng& rng) {
  VectorXd x = rng.gaussian_vector(d);
  double n = x.norm();
  if (n < 1e-12) x.setConstant(1.0 / std::sqrt(static_cast<double>(d)));
  return Arm(x / std::max(n, 1e-12));
}

ModelParams random_params(int K, int d, double S, Rng& rng) {
  VectorXd theta = rng.gaussian_vector(K * d);
  theta *= S / theta.norm();
  return ModelParams(theta, K, d, S);
}

std::vector<InteractionRecord> synthetic_data(const ModelParams& truth, int n,
                                              Rng& rng) {
  std::vector<InteractionRecord> data;
  data.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Arm arm = random_unit_arm(truth.d, rng);
    int y = sample_outcome(arm, truth, rng);
    data.push_back({arm, y, i + 1});
  }
  return data;
}

// -- core: link function and its derivatives ----------------------------

void suite_core(std::vector<CheckResult>& out, Rng& rng) {
  const int K = 3, d = 4;
  double worst_norm = 0.0, worst_range = 0.0, worst_psd = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    ModelParams params = random_params(K, d, 2.0, rng);
    Arm arm = random_unit_arm(d, rng);
    OutcomeProbabilities p = probabilities(arm, params);
    worst_norm = std::max(worst_norm, std::abs(p.z.sum() + p.z0 - 1.0));
    worst_range = std::max(worst_range, -std::min(p.z.minCoeff(), p.z0));
    MatrixXd a = link_gradient(arm, params);
    worst_psd = std::max(worst_psd,
                         std::max(-min_eig_sym(a), max_eig_sym(a) - 1.0));
  }
  push(out, "core.prob-normalization", 1e-12, worst_norm);
  push(out, "core.prob-nonnegative", 0.0, worst_range);
  push(out, "core.link-gradient-psd", 1e-10, worst_psd);

  // K = 1 must reduce to the sigmoid
  double worst_sig = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    ModelParams params = random_params(1, d, 1.5, rng);
    Arm arm = random_unit_arm(d, rng);
    double logit = arm.x().dot(params.coef(0));
    double sig = 1.0 / (1.0 + std::exp(-logit));
    worst_sig = std::max(worst_sig,
                         std::abs(probabilities(arm, params).z(0) - sig));
  }
  push(out, "core.sigmoid-reduction", 1e-12, worst_sig);

  // finite-difference agreement of the loss derivatives
  {
    const double lambda = 0.5, h = 1e-5;
    ModelParams truth = random_params(K, d, 1.0, rng);
    std::vector<InteractionRecord> data = synthetic_data(truth, 40, rng);
    ModelParams at = random_params(K, d, 0.8, rng);
    VectorXd g = nll_gradient(at, data, lambda);
    MatrixXd hess = nll_hessian(at, data, lambda);
    double worst_g = 0.0, worst_h = 0.0;
    for (int j = 0; j < K * d; ++j) {
      ModelParams up = at, dn = at;
      up.theta(j) += h;
      dn.theta(j) -= h;
      double fd = (nll_loss(up, data, lambda) - nll_loss(dn, data, lambda)) /
                  (2 * h);
      worst_g = std::max(worst_g, std::abs(fd - g(j)) / (1.0 + std::abs(g(j))));
      VectorXd fdh = (nll_gradient(up, data, lambda) -
                      nll_gradient(dn, data, lambda)) /
                     (2 * h);
      worst_h = std::max(
          worst_h, (fdh - hess.col(j)).cwiseAbs().maxCoeff() /
                       (1.0 + hess.col(j).cwiseAbs().maxCoeff()));
    }
    push(out, "core.gradient-finite-diff", 1e-6, worst_g);
    push(out, "core.hessian-finite-diff", 1e-5, worst_h);
  }

  // Kronecker mixed-product identity
  {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      MatrixXd a(2, 2), b(3, 3), c(2, 2), e(3, 3);
      for (auto* m : {&a, &c}) {
        for (int i = 0; i < 4; ++i) (*m)(i / 2, i % 2) = rng.normal();
      }
      for (auto* m : {&b, &e}) {
        for (int i = 0; i < 9; ++i) (*m)(i / 3, i % 3) = rng.normal();
      }
      MatrixXd lhs = kron(a, b) * kron(c, e);
      MatrixXd rhs = kron(MatrixXd(a * c), MatrixXd(b * e));
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    push(out, "core.kron-mixed-product", 1e-10, worst);
  }
}

// -- estimation: solver, radii, curvature --------------------------------

void suite_estimation(std::vector<CheckResult>& out, Rng& rng) {
  const int K = 3, d = 3;
  const double S = 2.0, lambda = 1.0;

  {
    ModelParams truth = random_params(K, d, S, rng);
    std::vector<InteractionRecord> data = synthetic_data(truth, 1500, rng);
    MleResult fit = fit_mle(data, K, d, S, lambda);
    push(out, "estimation.mle-converged", 0.0, fit.converged ? 0.0 : 1.0);
    push(out, "estimation.mle-gradient-norm", 1e-6, fit.grad_norm);
    push(out, "estimation.mle-recovery", 0.8,
         (fit.params.theta - truth.theta).norm());
  }

  {
    DesignMatrixV v(d, lambda);
    for (int i = 0; i < 30; ++i) v.add(random_unit_arm(d, rng).x());
    double worst = 0.0;
    MatrixXd vinv = v.matrix().inverse();
    for (int i = 0; i < 10; ++i) {
      VectorXd x = rng.gaussian_vector(d);
      double direct = std::sqrt(x.dot(vinv * x));
      worst = std::max(worst, std::abs(v.inv_norm(x) - direct));
    }
    push(out, "estimation.design-matrix-inv-norm", 1e-10, worst);
  }

  {
    ModelParams truth = random_params(K, d, S, rng);
    std::vector<InteractionRecord> data = synthetic_data(truth, 60, rng);
    std::vector<double> b(data.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = 1.0 + 3.0 * rng.uniform();
    }
    ScaledHessian h = build_scaled_hessian(data, truth, lambda, b);
    push(out, "estimation.scaled-hessian-floor", 1e-9,
         std::max(0.0, lambda - min_eig_sym(h.matrix())));
  }

  {
    double worst = 0.0, prev = 0.0;
    for (long T : {100L, 1000L, 10000L, 100000L}) {
      double g = confidence_radius_batched(S, K, d, static_cast<double>(T),
                                           lambda)
                     .gamma;
      if (T > 100) worst = std::max(worst, prev - g);
      prev = g;
    }
    push(out, "estimation.radius-monotone-T", 1e-12, worst);
  }

  {
    std::vector<ArmSet> sets;
    for (int s = 0; s < 3; ++s) {
      ArmSet arms;
      for (int i = 0; i < 5; ++i) arms.push_back(random_unit_arm(d, rng));
      sets.push_back(arms);
    }
    KappaEstimate kap = estimate_kappa(sets, S, K, 200, rng);
    double floor = (K + 1.0) * (K + 1.0);
    push(out, "estimation.kappa-includes-origin", 1e-9,
         std::max(0.0, floor - kap.kappa));

    DesignMatrixV v(d, lambda);
    for (int i = 0; i < 20; ++i) v.add(random_unit_arm(d, rng).x());
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      double b = scaling_factor(random_unit_arm(d, rng).x(), 0.7, kap.kappa, v,
                                S, ScalingVariant::batched);
      worst = std::max(worst, 1.0 - b);
    }
    push(out, "estimation.scaling-at-least-one", 0.0, worst);
  }
}

// -- design: optimal-design certificates and mixtures --------------------

void suite_design(std::vector<CheckResult>& out, Rng& rng) {
  const int d = 4;
  GOptimalOptions opts;  // epsilon = 0.01

  double worst_cert = 0.0, worst_simplex = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<VectorXd> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(random_unit_arm(d, rng).x());
    GOptimalResult res = g_optimal(pts, opts);
    worst_cert = std::max(
        worst_cert, res.certificate - (1.0 + opts.epsilon) * res.rank);
    double total = 0.0, neg = 0.0;
    for (auto& [idx, w] : res.weights.support) {
      total += w;
      neg = std::max(neg, -w);
    }
    worst_simplex = std::max(worst_simplex,
                             std::max(std::abs(total - 1.0), neg));
  }
  push(out, "design.g-optimal-certificate", 1e-9, worst_cert);
  push(out, "design.g-optimal-simplex", 1e-9, worst_simplex);

  const int K = 3;
  ModelParams theta = random_params(K, d, 1.5, rng);
  {
    ArmSet arms;
    for (int i = 0; i < 6; ++i) arms.push_back(random_unit_arm(d, rng));
    std::vector<double> b(arms.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1.0 + rng.uniform();
    auto sets = build_scaled_sets(arms, theta, b);
    double worst = 0.0;
    for (std::size_t j = 0; j < arms.size(); ++j) {
      MatrixXd sum = MatrixXd::Zero(K * d, K * d);
      for (int i = 0; i < K; ++i) {
        const VectorXd& v = sets[static_cast<std::size_t>(i)][j].vec;
        sum += v * v.transpose();
      }
      MatrixXd a = link_gradient(arms[j], theta);
      MatrixXd target =
          kron(a, MatrixXd(arms[j].x() * arms[j].x().transpose())) / b[j];
      worst = std::max(worst, (sum - target).cwiseAbs().maxCoeff());
    }
    push(out, "design.scaled-set-reconstruction", 1e-9, worst);
  }

  {
    std::vector<ArmSet> sample_sets;
    for (int s = 0; s < 6; ++s) {
      ArmSet arms;
      for (int i = 0; i < 5; ++i) arms.push_back(random_unit_arm(d, rng));
      sample_sets.push_back(arms);
    }
    DesignMatrixV v(d, 1.0);
    SelfConcordanceScaler scaler{0.5, 16.0, v, 1.5,
                                 ScalingVariant::batched};
    auto policy =
        mnl_design_policy(sample_sets, theta, scaler, opts, rng.fork(7));
    DesignWeights mix = policy->weights_for(sample_sets[0]);
    mix.validate(static_cast<int>(sample_sets[0].size()));
    GOptimalResult raw = g_optimal(sample_sets[0], opts);
    std::vector<double> g =
        raw.weights.dense(static_cast<int>(sample_sets[0].size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double floor = policy->mixing_weight() * 0.5 * g[i];
      worst = std::max(worst,
                       floor - mix.weight_of(static_cast<int>(i)));
    }
    push(out, "design.mixture-dominates-half-g", 1e-9, worst);
  }
}

// -- policies: schedules, intervals, switch budget ------------------------

void suite_policies(std::vector<CheckResult>& out, Rng& rng,
                    const VerifyOptions& opts) {
  {
    long violations = 0;
    BatchSchedule s = BatchSchedule::make(4500, 3);
    std::vector<long> expected{67, 616, 4500};
    if (s.boundaries != expected) ++violations;
    for (long T : {16L, 100L, 999L}) {
      for (int M = 1; M <= 4; ++M) {
        BatchSchedule sched = BatchSchedule::make(T, M);
        if (sched.boundaries.empty() || sched.boundaries.back() != T) {
          ++violations;
        }
        for (std::size_t i = 1; i < sched.boundaries.size(); ++i) {
          if (sched.boundaries[i] <= sched.boundaries[i - 1]) ++violations;
        }
      }
    }
    push(out, "policies.batch-schedule", 0.0,
         static_cast<double>(violations));
  }

  {
    const int K = 2, d = 3;
    const double S = 1.5, lambda = 2.0;
    ModelParams theta = random_params(K, d, S, rng);
    ScaledHessian h(K, d, lambda, HessianKind::optimal);
    DesignMatrixV v(d, lambda);
    for (int i = 0; i < 25; ++i) {
      Arm arm = random_unit_arm(d, rng);
      h.add_term(link_gradient(arm, theta), arm.x(), 1.0 + rng.uniform());
      v.add(arm.x());
    }
    BatchCheckpoint cp(theta, h, v,
                       confidence_radius_batched(S, K, d, 500.0, lambda), 0);
    VectorXd rho_raw(K);
    for (int i = 0; i < K; ++i) rho_raw(i) = rng.uniform();
    RewardVector rho(rho_raw, rho_raw.norm());
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      Arm arm = random_unit_arm(d, rng);
      auto [ucb, lcb] = ucb_lcb(arm, cp, rho);
      double mean = expected_reward(arm, theta, rho);
      worst = std::max(worst, std::max(lcb - mean, mean - ucb));
    }
    push(out, "policies.ucb-sandwiches-mean", 1e-9, worst);
  }

  {
    const long T = 250;
    EnvironmentSpec spec = EnvironmentSpec::sample(
        EnvironmentKind::stochastic_fixed_pool, 3, 3, 8, 2.0, 1.0, 11);
    Environment env(spec);
    AlgoConfig config;
    config.lambda_override = 1.0;
    config.kappa = 1.0;
    config.c_gamma = 0.02;
    RegretTrace trace = rsmnl_run(env, T, spec.rho, spec.S(), 0.01, config,
                                  rng.fork(3));
    double budget = switch_bound(spec.d(), spec.K(), 1.0,
                                 static_cast<double>(T)) *
                    opts.switch_budget_factor;
    push(out, "policies.rs-switch-budget", budget,
         static_cast<double>(trace.switch_count));
    push(out, "policies.rs-switched-at-all", 0.0,
         trace.switch_count >= 1 ? 0.0 : 1.0);
    push(out, "policies.elliptical-potential", 1e-9,
         trace.elliptical_excess);
    double worst_gap = -std::numeric_limits<double>::infinity();
    double prev_logdet = trace.rows.empty() ? 0.0 : trace.rows[0].logdet_h;
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
      if (!trace.rows[i].is_switch) {
        // pre-selection determinant gap must stay under one doubling
        worst_gap = std::max(
            worst_gap, trace.rows[i - 1].logdet_h - prev_logdet -
                           std::log(2.0));
      } else {
        prev_logdet = trace.rows[i].logdet_h;
      }
    }
    push(out, "policies.rs-gap-under-doubling", 1e-9, worst_gap);
  }
}

}  // namespace

VerifyReport verify_suite(const std::string& suite, std::uint64_t seed,
                          const VerifyOptions& opts) {
  VerifyReport report;
  report.suite = suite;
  report.seed = seed;
  Rng rng(seed);
  bool known = false;
  if (suite == "core" || suite == "all") {
    suite_core(report.checks, rng);
    known = true;
  }
  if (suite == "estimation" || suite == "all") {
    suite_estimation(report.checks, rng);
    known = true;
  }
  if (suite == "design" || suite == "all") {
    suite_design(report.checks, rng);
    known = true;
  }
  if (suite == "policies" || suite == "all") {
    suite_policies(report.checks, rng, opts);
    known = true;
  }
  if (!known) throw std::invalid_argument("unknown verify suite: " + suite);
  return report;
}

std::string format_report(const VerifyReport& report) {
  std::ostringstream out;
  out << "suite=" << report.suite << " seed=" << report.seed << "\n";
  for (const CheckResult& c : report.checks) {
    out << "check=" << c.name << " tolerance=" << format_double(c.tolerance)
        << " observed=" << format_double(c.observed) << " status="
        << (c.pass ? "pass" : "fail") << "\n";
  }
  out << "result=" << (report.all_pass() ? "pass" : "fail")
      << " checks=" << report.checks.size()
      << " failures=" << report.failures() << "\n";
  return out.str();
}

}  // namespace mnlb
