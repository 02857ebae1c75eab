#include <array>
#include <cmath>

#include "doctest.h"
#include "mnlb/mnl.hpp"

using namespace mnlb;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelParams random_params(Rng& rng, int K, int d, double radius, double S) {
  return ModelParams(rng.uniform_in_ball(K * d, radius), K, d, S);
}

Arm random_arm(Rng& rng, int d) { return Arm(rng.uniform_in_ball(d, 1.0)); }

// Outcome probabilities as a function of the K linear predictors directly;
// the independent oracle for the link-gradient Jacobian check.
VectorXd z_of_logits(const VectorXd& u) {
  double m = std::max(0.0, u.maxCoeff());
  VectorXd e = (u.array() - m).exp();
  return e / (std::exp(-m) + e.sum());
}

}  // namespace

TEST_CASE("probabilities normalize and stay strictly inside (0,1)") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int K = 1 + rng.uniform_int(3);
    int d = 1 + rng.uniform_int(4);
    ModelParams p = random_params(rng, K, d, 5.0, 5.0);
    Arm arm = random_arm(rng, d);
    OutcomeProbabilities probs = probabilities(arm, p);
    REQUIRE(probs.z.size() == K);
    CHECK(std::abs(probs.z.sum() + probs.z0 - 1.0) <= 1e-12);
    CHECK(probs.z0 > 0.0);
    CHECK(probs.z0 < 1.0);
    for (int i = 0; i < K; ++i) {
      CHECK(probs.z[i] > 0.0);
      CHECK(probs.z[i] < 1.0);
    }
  }
}

TEST_CASE("probabilities match hand-computed softmax values") {
  // x = e1 in R^2, K = 2, theta = (ln 2, 0, ln 3, 0): odds 2 and 3 against 1.
  VectorXd theta(4);
  theta << std::log(2.0), 0.0, std::log(3.0), 0.0;
  ModelParams p(theta, 2, 2, 2.0);
  VectorXd x(2);
  x << 1.0, 0.0;
  OutcomeProbabilities probs = probabilities(Arm(x), p);
  CHECK(probs.z[0] == doctest::Approx(2.0 / 6.0).epsilon(1e-14));
  CHECK(probs.z[1] == doctest::Approx(3.0 / 6.0).epsilon(1e-14));
  CHECK(probs.z0 == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  ModelParams zero(VectorXd::Zero(6), 3, 2, 1.0);
  OutcomeProbabilities uniform = probabilities(Arm(x), zero);
  for (int i = 0; i < 3; ++i) CHECK(uniform.z[i] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(uniform.z0 == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("K=1 reduces to the plain sigmoid") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + rng.uniform_int(5);
    ModelParams p = random_params(rng, 1, d, 4.0, 4.0);
    Arm arm = random_arm(rng, d);
    double direct = 1.0 / (1.0 + std::exp(-p.theta.dot(arm.x())));
    CHECK(std::abs(probabilities(arm, p).z[0] - direct) <= 1e-12);
  }
}

TEST_CASE("probabilities survive extreme logits via max subtraction") {
  VectorXd theta(2);
  theta << 40.0, -40.0;
  ModelParams p(theta, 2, 1, 60.0);
  VectorXd x(1);
  x << 1.0;
  OutcomeProbabilities probs = probabilities(Arm(x), p);
  CHECK(std::isfinite(probs.z[0]));
  CHECK(probs.z[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(probs.z.sum() + probs.z0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("link gradient equals diag(z) - zz^T and is PSD below identity") {
  VectorXd x1(1);
  x1 << 1.0;
  ModelParams zero2(VectorXd::Zero(2), 2, 1, 1.0);
  MatrixXd a = link_gradient(Arm(x1), zero2);
  CHECK(a(0, 0) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(a(1, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(a(0, 1) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));
  CHECK(a(1, 0) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));

  ModelParams zero1(VectorXd::Zero(1), 1, 1, 1.0);
  CHECK(link_gradient(Arm(x1), zero1)(0, 0) == doctest::Approx(0.25).epsilon(1e-14));

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    int K = 1 + rng.uniform_int(3);
    int d = 1 + rng.uniform_int(4);
    ModelParams p = random_params(rng, K, d, 3.0, 3.0);
    MatrixXd link = link_gradient(random_arm(rng, d), p);
    CHECK((link - link.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(min_eig_sym(link) >= -1e-12);
    CHECK(max_eig_sym(MatrixXd::Identity(K, K) - link) >= -1e-12);
  }
}

TEST_CASE("link gradient matches the finite-difference Jacobian of z") {
  // With d = K and x cycling through scaled basis vectors, perturbing theta
  // block i by h*e_j moves logit i by h*x_j, so dz/du is probed directly.
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    int K = 1 + rng.uniform_int(3);
    VectorXd u = rng.uniform_in_cube(K, -3.0, 3.0);

    // Oracle Jacobian by central differences on z_of_logits.
    const double h = 1e-6;
    MatrixXd jac(K, K);
    for (int j = 0; j < K; ++j) {
      VectorXd up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      jac.col(j) = (z_of_logits(up) - z_of_logits(dn)) / (2.0 * h);
    }

    // Realize the same logits through the model: d = K, x = e1, theta_i = u_i e1.
    VectorXd theta = VectorXd::Zero(K * K);
    for (int i = 0; i < K; ++i) theta[i * K] = u[i];
    VectorXd x = VectorXd::Zero(K);
    x[0] = 1.0;
    MatrixXd a = link_gradient(Arm(x), ModelParams(theta, K, K, 10.0));
    double rel = (a - jac).norm() / std::max(1.0, jac.norm());
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("expected reward is rho dot z") {
  VectorXd x(1);
  x << 1.0;
  ModelParams zero(VectorXd::Zero(2), 2, 1, 1.0);
  VectorXd rho(2);
  rho << 3.0, 3.0;
  CHECK(expected_reward(Arm(x), zero, RewardVector(rho, 5.0)) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("sample_outcome follows the model law and is seed-deterministic") {
  VectorXd theta(2);
  theta << std::log(2.0), std::log(3.0);
  ModelParams p(theta, 2, 1, 2.0);
  VectorXd x(1);
  x << 1.0;
  Arm arm(x);

  Rng rng(15);
  std::array<int, 3> counts{};
  const int n = 120000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_outcome(arm, p, rng))];
  CHECK(std::abs(counts[0] / double(n) - 1.0 / 6.0) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 2.0 / 6.0) < 0.01);
  CHECK(std::abs(counts[2] / double(n) - 3.0 / 6.0) < 0.01);

  Rng r1(99), r2(99);
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_outcome(arm, p, r1) == sample_outcome(arm, p, r2));
  }
}

TEST_CASE("response indicator is one-hot with zero row for the null outcome") {
  CHECK(response_indicator(0, 3).isZero());
  VectorXd m = response_indicator(2, 3);
  CHECK(m[1] == 1.0);
  CHECK(m.sum() == 1.0);
  CHECK(response_indicator(1, 1)[0] == 1.0);
  CHECK_THROWS_AS(response_indicator(4, 3), std::invalid_argument);
  CHECK_THROWS_AS(response_indicator(-1, 3), std::invalid_argument);
}

TEST_CASE("kron satisfies identity and mixed-product laws") {
  CHECK(kron(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3))
            .isApprox(MatrixXd::Identity(6, 6)));

  Rng rng(16);
  auto rand_mat = [&](int r, int c) {
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  MatrixXd a = rand_mat(2, 3), b = rand_mat(3, 2), c = rand_mat(3, 2),
           d = rand_mat(2, 4);
  CHECK((kron(a, b) * kron(c, d)).isApprox(kron(a * c, b * d), 1e-12));

  VectorXd va = rand_mat(3, 1), vb = rand_mat(2, 1);
  CHECK(kron_vec(va, vb).isApprox(kron(va, vb).col(0)));
  VectorXd manual(6);
  manual << va[0] * vb, va[1] * vb, va[2] * vb;
  CHECK(kron_vec(va, vb).isApprox(manual));
}

TEST_CASE("construction contracts are enforced") {
  VectorXd big(2);
  big << 1.0, 1.0;
  CHECK_THROWS_AS(Arm{big}, std::invalid_argument);
  CHECK_THROWS_AS(Arm{VectorXd(0)}, std::invalid_argument);

  VectorXd rho(2);
  rho << 1.0, -0.1;
  CHECK_THROWS_AS(RewardVector(rho, 2.0), std::invalid_argument);
  VectorXd rho2(2);
  rho2 << 2.0, 2.0;
  CHECK_THROWS_AS(RewardVector(rho2, 1.0), std::invalid_argument);

  CHECK_THROWS_AS(ModelParams(VectorXd::Zero(3), 2, 2, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(VectorXd::Zero(4), 2, 2, 0.0),
                  std::invalid_argument);
}
