#include <cmath>
#include <vector>

#include "doctest.h"
#include "mnlb/estimation.hpp"

using namespace mnlb;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<InteractionRecord> simulate_records(Rng& rng, const ModelParams& truth,
                                                int n) {
  std::vector<InteractionRecord> data;
  data.reserve(n);
  for (int s = 0; s < n; ++s) {
    Arm arm(rng.uniform_in_ball(truth.d, 1.0));
    int y = sample_outcome(arm, truth, rng);
    data.push_back({arm, y, s + 1});
  }
  return data;
}

std::vector<InteractionRecord> random_records(Rng& rng, int K, int d, int n) {
  std::vector<InteractionRecord> data;
  data.reserve(n);
  for (int s = 0; s < n; ++s) {
    Arm arm(rng.uniform_in_ball(d, 1.0));
    data.push_back({arm, rng.uniform_int(K + 1), s + 1});
  }
  return data;
}

// First-order condition assembled independently of nll_gradient:
// sum z(x_s, theta) kron x_s + lambda theta - sum m_s kron x_s.
VectorXd stationarity_residual(const ModelParams& theta,
                               const std::vector<InteractionRecord>& data,
                               double lambda) {
  VectorXd lhs = lambda * theta.theta;
  for (const InteractionRecord& rec : data) {
    lhs += kron_vec(probabilities(rec.arm, theta).z, rec.arm.x());
    lhs -= kron_vec(response_indicator(rec.outcome, theta.K), rec.arm.x());
  }
  return lhs;
}

}  // namespace

TEST_CASE("design matrix V accumulates outer products over lambda I") {
  DesignMatrixV v(2, 2.0);
  CHECK(v.matrix().isApprox(2.0 * MatrixXd::Identity(2, 2)));
  VectorXd x(2);
  x << 0.6, 0.8;
  CHECK(v.inv_norm(x) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  v.add(x);
  CHECK(v.count() == 1);
  MatrixXd expect = 2.0 * MatrixXd::Identity(2, 2) + x * x.transpose();
  CHECK(v.matrix().isApprox(expect, 1e-14));
  CHECK(v.inv_norm(x) ==
        doctest::Approx(std::sqrt(x.dot(expect.inverse() * x))).epsilon(1e-12));
  CHECK(min_eig_sym(v.matrix()) >= 2.0 - 1e-9);
}

TEST_CASE("scaled hessian accumulates A kron xx^T / b") {
  Rng rng(21);
  int K = 2, d = 3;
  ScaledHessian h(K, d, 0.5, HessianKind::proxy);
  CHECK(h.logdet() == doctest::Approx(K * d * std::log(0.5)).epsilon(1e-12));

  ModelParams p(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
  VectorXd x = rng.uniform_in_ball(d, 1.0);
  MatrixXd a = link_gradient(Arm(x), p);
  h.add_term(a, x, 2.5);
  MatrixXd expect = 0.5 * MatrixXd::Identity(K * d, K * d) +
                    kron(a, (x * x.transpose()) / 2.5);
  CHECK(h.matrix().isApprox(expect, 1e-13));
  CHECK_THROWS_AS(h.add_term(a, x, 0.5), std::invalid_argument);
}

TEST_CASE("hessians satisfy the determinant-trace inequality") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    int K = 1 + rng.uniform_int(3), d = 1 + rng.uniform_int(3);
    ModelParams p(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
    ScaledHessian h(K, d, 1.0, HessianKind::proxy);
    for (int s = 0; s < 15; ++s) {
      VectorXd x = rng.uniform_in_ball(d, 1.0);
      h.add_term(link_gradient(Arm(x), p), x, 1.0 + rng.uniform());
    }
    double n = K * d;
    CHECK(h.logdet() <= n * std::log(h.matrix().trace() / n) + 1e-9);
  }
}

TEST_CASE("batched confidence radius matches the closed form") {
  double e = std::exp(1.0);
  ConfidenceRadius r = confidence_radius_batched(1.0, 1, 1, e, 1.0);
  CHECK(r.gamma == doctest::Approx(34.97056274847714).epsilon(1e-12));
  CHECK(r.flavor == RadiusFlavor::batched);

  // Monotone in T, K, d.
  double base = confidence_radius_batched(2.0, 2, 3, 1000, 1.0).gamma;
  CHECK(confidence_radius_batched(2.0, 2, 3, 2000, 1.0).gamma >= base);
  CHECK(confidence_radius_batched(2.0, 3, 3, 1000, 1.0).gamma >= base);
  CHECK(confidence_radius_batched(2.0, 2, 4, 1000, 1.0).gamma >= base);

  // c_gamma scales linearly.
  CHECK(confidence_radius_batched(1.0, 1, 1, e, 1.0, 0.5).gamma ==
        doctest::Approx(0.5 * 34.97056274847714).epsilon(1e-12));
}

TEST_CASE("appendix lambda keeps the batched radius below 22 S^{5/4} sqrt(Kd log T)") {
  // The bound is a large-horizon statement; it needs S >= 1 and log T
  // comparable to Kd (within a factor ~2 either way), which is the regime the
  // T = exp(Theta(Kd)) horizons of the analysis live in.
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    double S = 1.0 + 3.0 * rng.uniform();
    int K = 1 + rng.uniform_int(4);
    int d = 1 + rng.uniform_int(6);
    while (K * d < 4) d = 1 + rng.uniform_int(6);
    double T = std::exp((0.5 + 1.5 * rng.uniform()) * K * d);
    double lambda = K * d * std::log(T) / std::sqrt(S);
    double gamma = confidence_radius_batched(S, K, d, T, lambda).gamma;
    CHECK(gamma <= 22.0 * std::pow(S, 1.25) * std::sqrt(K * d * std::log(T)));
  }
}

TEST_CASE("rarely-switching confidence radius matches the closed form") {
  double T = std::exp(1.0) * 0.5;
  ConfidenceRadius r = confidence_radius_rs(1.0, 1, 1, T, 0.5, 1.0);
  CHECK(r.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(confidence_radius_rs(1.0, 1, 1, T, 0.5, 2.0).gamma ==
        doctest::Approx(2.0).epsilon(1e-12));
  // sqrt(d) scaling when only d varies.
  double g1 = confidence_radius_rs(2.0, 2, 2, 1000, 0.01, 1.0).gamma;
  double g2 = confidence_radius_rs(2.0, 2, 8, 1000, 0.01, 1.0).gamma;
  CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-12));
}

TEST_CASE("kappa estimate hits known values") {
  VectorXd one(1);
  one << 1.0;
  std::vector<ArmSet> sets{{Arm(one)}};

  // Ball collapsed to the origin: 1/lambda_min(A(x, 0)) = (K+1)^2.
  Rng rng(24);
  KappaEstimate k0 = estimate_kappa(sets, 1e-12, 1, 5, rng);
  CHECK(k0.kappa == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(k0.sampled);

  // 1-D grid oracle: max over theta in [-2,2] of 1/(sigma(1-sigma)) is at the
  // boundary, 1/(sigma(2)sigma(-2)) = 9.5244...
  KappaEstimate k2 = estimate_kappa(sets, 2.0, 1, 20000, rng);
  CHECK(k2.kappa <= 9.524391382167254 + 1e-9);
  CHECK(k2.kappa >= 9.2);

  // Monotone in n_samples (same rng seed, prefix property of sampling).
  Rng ra(7), rb(7);
  double few = estimate_kappa(sets, 2.0, 1, 100, ra).kappa;
  double many = estimate_kappa(sets, 2.0, 1, 1000, rb).kappa;
  CHECK(many >= few);
}

TEST_CASE("nll loss on empty data is the ridge term") {
  std::vector<InteractionRecord> empty;
  ModelParams zero(VectorXd::Zero(2), 2, 1, 1.0);
  CHECK(nll_loss(zero, empty, 3.0) == 0.0);
  VectorXd th(2);
  th << 1.0, 2.0;
  ModelParams p(th, 2, 1, 3.0);
  CHECK(nll_loss(p, empty, 3.0) == doctest::Approx(1.5 * 5.0).epsilon(1e-14));
  CHECK(nll_gradient(p, empty, 3.0).isApprox(3.0 * th));
  CHECK(nll_hessian(p, empty, 3.0).isApprox(3.0 * MatrixXd::Identity(2, 2)));
}

TEST_CASE("single-record losses match hand computation") {
  VectorXd x(1);
  x << 1.0;
  ModelParams zero(VectorXd::Zero(1), 1, 1, 1.0);
  std::vector<InteractionRecord> null_rec{{Arm(x), 0, 1}};
  std::vector<InteractionRecord> one_rec{{Arm(x), 1, 1}};
  CHECK(nll_loss(zero, null_rec, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(nll_loss(zero, one_rec, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // K=1 hessian: sigma(1-sigma) xx^T + lambda I.
  MatrixXd h = nll_hessian(zero, one_rec, 0.7);
  CHECK(h(0, 0) == doctest::Approx(0.25 + 0.7).epsilon(1e-14));
}

TEST_CASE("gradient and hessian match finite differences") {
  Rng rng(25);
  for (int trial = 0; trial < 25; ++trial) {
    int K = 1 + rng.uniform_int(3), d = 1 + rng.uniform_int(3);
    double lambda = 0.5 + rng.uniform();
    auto data = random_records(rng, K, d, 8);
    ModelParams p(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);

    const double h = 1e-6;
    VectorXd g = nll_gradient(p, data, lambda);
    VectorXd g_fd(K * d);
    for (int i = 0; i < K * d; ++i) {
      VectorXd up = p.theta, dn = p.theta;
      up[i] += h;
      dn[i] -= h;
      g_fd[i] = (nll_loss(ModelParams(up, K, d, 2.0), data, lambda) -
                 nll_loss(ModelParams(dn, K, d, 2.0), data, lambda)) /
                (2.0 * h);
    }
    CHECK((g - g_fd).norm() / std::max(1.0, g_fd.norm()) <= 1e-5);

    MatrixXd hess = nll_hessian(p, data, lambda);
    MatrixXd h_fd(K * d, K * d);
    for (int i = 0; i < K * d; ++i) {
      VectorXd up = p.theta, dn = p.theta;
      up[i] += h;
      dn[i] -= h;
      h_fd.col(i) = (nll_gradient(ModelParams(up, K, d, 2.0), data, lambda) -
                     nll_gradient(ModelParams(dn, K, d, 2.0), data, lambda)) /
                    (2.0 * h);
    }
    CHECK((hess - h_fd).norm() / std::max(1.0, h_fd.norm()) <= 1e-4);

    // Hessian is also expressible through the Kronecker identity.
    MatrixXd manual = lambda * MatrixXd::Identity(K * d, K * d);
    for (const InteractionRecord& rec : data) {
      manual += kron(link_gradient(rec.arm, p),
                     rec.arm.x() * rec.arm.x().transpose());
    }
    CHECK(hess.isApprox(manual, 1e-12));
  }
}

TEST_CASE("loss decreases along the Newton direction") {
  Rng rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    int K = 1 + rng.uniform_int(2), d = 1 + rng.uniform_int(3);
    auto data = random_records(rng, K, d, 20);
    ModelParams p(rng.uniform_in_ball(K * d, 3.0), K, d, 3.0);
    double lambda = 1.0;
    VectorXd g = nll_gradient(p, data, lambda);
    if (g.norm() < 1e-12) continue;
    MatrixXd h = nll_hessian(p, data, lambda);
    VectorXd step = -h.llt().solve(g);
    double before = nll_loss(p, data, lambda);
    double after = nll_loss(ModelParams(p.theta + 1e-3 * step, K, d, 3.0), data, lambda);
    CHECK(after < before);
  }
}

TEST_CASE("fit_mle satisfies the stationarity condition") {
  Rng rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    int K = 1 + rng.uniform_int(3), d = 1 + rng.uniform_int(5);
    int n = 5 + rng.uniform_int(100);
    double lambda = 0.5 + 2.0 * rng.uniform();
    ModelParams truth(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
    auto data = simulate_records(rng, truth, n);

    MleResult fit = fit_mle(data, K, d, 2.0, lambda);
    REQUIRE(fit.converged);
    CHECK(fit.grad_norm <= 1e-10);
    CHECK(stationarity_residual(fit.params, data, lambda).norm() <= 1e-8);
  }
}

TEST_CASE("fit_mle on empty data returns zero") {
  std::vector<InteractionRecord> empty;
  MleResult fit = fit_mle(empty, 2, 3, 1.0, 1.0);
  CHECK(fit.converged);
  CHECK(fit.iterations == 0);
  CHECK(fit.params.theta.isZero());
}

TEST_CASE("fit_mle is deterministic and warm starts reach the same optimum") {
  Rng rng(28);
  ModelParams truth(rng.uniform_in_ball(6, 2.0), 2, 3, 2.0);
  auto data = simulate_records(rng, truth, 80);
  MleResult a = fit_mle(data, 2, 3, 2.0, 1.0);
  MleResult b = fit_mle(data, 2, 3, 2.0, 1.0);
  CHECK(a.params.theta == b.params.theta);

  VectorXd start = truth.theta;
  MleResult warm = fit_mle(data, 2, 3, 2.0, 1.0, {}, &start);
  CHECK((warm.params.theta - a.params.theta).norm() <= 1e-8);
}

TEST_CASE("fit_mle reports non-convergence with diagnostics") {
  Rng rng(29);
  ModelParams truth(rng.uniform_in_ball(2, 2.0), 1, 2, 2.0);
  auto data = simulate_records(rng, truth, 50);
  MleOptions opts;
  opts.max_iters = 1;
  opts.tol = 1e-14;
  MleResult fit = fit_mle(data, 1, 2, 2.0, 1.0, opts);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
  CHECK(fit.grad_norm > 1e-14);
  CHECK_THROWS_AS(fit_mle(data, 1, 2, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("longer logs estimate theta at least as well (consistency)") {
  int wins = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    VectorXd theta = rng.uniform_in_ball(4, 2.0);
    theta *= 2.0 / theta.norm();
    ModelParams truth(theta, 2, 2, 2.0);
    std::vector<InteractionRecord> data;
    for (int s = 0; s < 500; ++s) {
      VectorXd x = rng.gaussian_vector(2);
      Arm arm(x / x.norm());
      data.push_back({arm, sample_outcome(arm, truth, rng), s + 1});
    }
    std::vector<InteractionRecord> prefix(data.begin(), data.begin() + 200);
    double err_full = (fit_mle(data, 2, 2, 2.0, 1.0).params.theta - theta).norm();
    double err_prefix =
        (fit_mle(prefix, 2, 2, 2.0, 1.0).params.theta - theta).norm();
    if (err_full <= err_prefix) ++wins;
  }
  CHECK(wins >= 8);
}

TEST_CASE("scaling factor endpoints and monotonicity") {
  DesignMatrixV v(2, 1.0);
  VectorXd zero = VectorXd::Zero(2);
  CHECK(scaling_factor(zero, 3.0, 2.0, v, 2.0, ScalingVariant::batched) == 1.0);

  VectorXd x(2);
  x << 0.6, 0.8;
  double cap = std::exp(2.0 * std::sqrt(6.0) * 2.0);
  CHECK(cap == doctest::Approx(17996.97507077999).epsilon(1e-10));
  CHECK(scaling_factor(x, 1e9, 4.0, v, 2.0, ScalingVariant::batched) ==
        doctest::Approx(cap).epsilon(1e-12));

  // Below the cap the RS variant squares the batched one (factor 2 in the min).
  double gb = scaling_factor(x, 0.1, 1.5, v, 2.0, ScalingVariant::batched);
  double gr = scaling_factor(x, 0.1, 1.5, v, 2.0, ScalingVariant::rarely_switching);
  CHECK(gr == doctest::Approx(gb * gb).epsilon(1e-12));
  CHECK(gb >= 1.0);

  // Adding data shrinks ||x||_{V^-1} and therefore B.
  DesignMatrixV v2(2, 1.0);
  double before = scaling_factor(x, 0.5, 1.0, v2, 2.0, ScalingVariant::batched);
  v2.add(x);
  CHECK(scaling_factor(x, 0.5, 1.0, v2, 2.0, ScalingVariant::batched) < before);
}

TEST_CASE("self-concordance sandwich holds for random parameter pairs") {
  Rng rng(30);
  for (int trial = 0; trial < 60; ++trial) {
    int K = 1 + rng.uniform_int(3), d = 1 + rng.uniform_int(3);
    ModelParams p1(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
    ModelParams p2(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
    Arm x1(rng.uniform_in_ball(d, 1.0));
    Arm x2(rng.uniform_in_ball(d, 1.0));

    VectorXd u1(K), u2(K);
    for (int i = 0; i < K; ++i) {
      u1[i] = p1.coef(i).dot(x1.x());
      u2[i] = p2.coef(i).dot(x2.x());
    }
    double dist = (u1 - u2).norm();
    MatrixXd a1 = link_gradient(x1, p1);
    MatrixXd a2 = link_gradient(x2, p2);
    CHECK(min_eig_sym(a1 - a2 * std::exp(-std::sqrt(6.0) * dist)) >= -1e-9);
    CHECK(min_eig_sym(a2 * std::exp(std::sqrt(6.0) * dist) - a1) >= -1e-9);
  }
}

TEST_CASE("build_scaled_hessian matches the manual sum and its limits") {
  Rng rng(31);
  int K = 2, d = 2;
  ModelParams truth(rng.uniform_in_ball(K * d, 2.0), K, d, 2.0);
  auto data = simulate_records(rng, truth, 12);
  ModelParams theta_hat = fit_mle(data, K, d, 2.0, 1.0).params;

  std::vector<double> ones(data.size(), 1.0);
  ScaledHessian h1 = build_scaled_hessian(data, theta_hat, 1.0, ones);
  CHECK(h1.matrix().isApprox(nll_hessian(theta_hat, data, 1.0), 1e-12));
  CHECK(h1.kind() == HessianKind::proxy);

  std::vector<double> huge(data.size(), 1e15);
  ScaledHessian h2 = build_scaled_hessian(data, theta_hat, 1.0, huge);
  CHECK((h2.matrix() - MatrixXd::Identity(K * d, K * d)).cwiseAbs().maxCoeff() <=
        1e-12);

  std::vector<double> wrong(data.size() - 1, 1.0);
  CHECK_THROWS_AS(build_scaled_hessian(data, theta_hat, 1.0, wrong),
                  std::invalid_argument);
}
