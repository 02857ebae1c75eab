#include "mnlb/design.hpp"

#include <chrono>
#include <cmath>

#include "doctest.h"

using namespace mnlb;

namespace {

std::vector<VectorXd> random_points(Rng& rng, int n, int d, double radius = 1.0) {
  std::vector<VectorXd> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    VectorXd v = rng.gaussian_vector(d);
    v *= radius / std::max(1.0, v.norm());
    pts.push_back(v);
  }
  return pts;
}

ArmSet random_arms(Rng& rng, int n, int d) {
  ArmSet arms;
  for (const VectorXd& v : random_points(rng, n, d)) arms.emplace_back(v);
  return arms;
}

// Certificate recomputed from scratch with a pseudo-inverse, no shared code
// with the solver's span projection.
double brute_certificate(const std::vector<VectorXd>& pts,
                         const DesignWeights& w) {
  const int d = static_cast<int>(pts.front().size());
  MatrixXd v = MatrixXd::Zero(d, d);
  for (const auto& [idx, wt] : w.support) {
    v.noalias() += wt * pts[static_cast<std::size_t>(idx)] *
                   pts[static_cast<std::size_t>(idx)].transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(v);
  MatrixXd pinv = cod.pseudoInverse();
  double cert = 0.0;
  for (const VectorXd& p : pts) cert = std::max(cert, p.dot(pinv * p));
  return cert;
}

}  // namespace

TEST_CASE("design weights validate and query") {
  DesignWeights w;
  w.support = {{0, 0.25}, {2, 0.75}};
  w.validate(3);
  CHECK(w.weight_of(0) == doctest::Approx(0.25));
  CHECK(w.weight_of(1) == 0.0);
  CHECK(w.weight_of(2) == doctest::Approx(0.75));
  auto dense = w.dense(4);
  CHECK(dense.size() == 4);
  CHECK(dense[2] == doctest::Approx(0.75));
  CHECK(dense[3] == 0.0);

  DesignWeights bad0;
  bad0.support = {{3, 1.0}};
  CHECK_THROWS_AS(bad0.validate(3), std::invalid_argument);
  DesignWeights bad1;
  bad1.support = {{0, 0.5}, {0, 0.5}};
  CHECK_THROWS_AS(bad1.validate(3), std::invalid_argument);
  DesignWeights bad2;
  bad2.support = {{0, 0.5}};
  CHECK_THROWS_AS(bad2.validate(3), std::invalid_argument);
}

TEST_CASE("g-optimal on an orthonormal basis is uniform with certificate d") {
  const int d = 5;
  std::vector<VectorXd> pts;
  for (int i = 0; i < d; ++i) pts.push_back(VectorXd::Unit(d, i));
  auto res = g_optimal(pts);
  CHECK(res.converged);
  CHECK(res.rank == d);
  CHECK(res.certificate == doctest::Approx(double(d)).epsilon(1e-9));
  REQUIRE(res.weights.support.size() == d);
  for (const auto& [idx, wt] : res.weights.support) {
    CHECK(wt == doctest::Approx(1.0 / d).epsilon(1e-9));
  }
  res.weights.validate(d);
}

TEST_CASE("g-optimal on a single point puts all mass there") {
  VectorXd x(3);
  x << 0.3, -0.2, 0.5;
  auto res = g_optimal(std::vector<VectorXd>{x});
  CHECK(res.converged);
  CHECK(res.rank == 1);
  REQUIRE(res.weights.support.size() == 1);
  CHECK(res.weights.support[0].second == doctest::Approx(1.0));
  CHECK(res.certificate == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("g-optimal handles duplicates and rank-deficient spans") {
  Rng rng(77);
  // Points confined to a 2-plane inside R^5.
  VectorXd a = VectorXd::Unit(5, 0), b = VectorXd::Unit(5, 3);
  std::vector<VectorXd> pts;
  for (int i = 0; i < 12; ++i) {
    double t = rng.uniform() * 2.0 - 1.0;
    double s = rng.uniform() * 2.0 - 1.0;
    VectorXd v = t * a + s * b;
    v /= std::max(1.0, v.norm());
    pts.push_back(v);
  }
  pts.push_back(pts[0]);  // exact duplicate
  auto res = g_optimal(pts);
  CHECK(res.converged);
  CHECK(res.rank == 2);
  CHECK(res.certificate <= 1.01 * 2 + 1e-9);
  CHECK(res.certificate >= 2.0 - 1e-9);  // optimum cannot beat the rank
  res.weights.validate(static_cast<int>(pts.size()));
  CHECK(brute_certificate(pts, res.weights) ==
        doctest::Approx(res.certificate).epsilon(1e-6));
}

TEST_CASE("g-optimal on the zero set degenerates to uniform") {
  std::vector<VectorXd> pts(3, VectorXd::Zero(4));
  auto res = g_optimal(pts);
  CHECK(res.converged);
  CHECK(res.rank == 0);
  CHECK(res.certificate == 0.0);
  CHECK(res.weights.support.size() == 3);
  res.weights.validate(3);
}

TEST_CASE("g-optimal certificate matches a pseudo-inverse recomputation") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 2 + rng.uniform_int(5);
    int n = d + rng.uniform_int(12);
    auto pts = random_points(rng, n, d);
    auto res = g_optimal(pts);
    CHECK(res.converged);
    CHECK(res.certificate >= res.rank - 1e-9);
    CHECK(res.certificate <= 1.01 * res.rank + 1e-9);
    CHECK(brute_certificate(pts, res.weights) ==
          doctest::Approx(res.certificate).epsilon(1e-6));
    res.weights.validate(n);
  }
}

TEST_CASE("g-optimal batch: 50 sets of 10 arms in d=3 within budget") {
  Rng rng(501);
  auto start = std::chrono::steady_clock::now();
  for (int s = 0; s < 50; ++s) {
    auto pts = random_points(rng, 10, 3);
    auto res = g_optimal(pts);
    CHECK(res.converged);
    CHECK(res.certificate <= 3.03 + 1e-12);
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  CHECK(secs < 10.0);
}

TEST_CASE("g-optimal rejects bad input") {
  CHECK_THROWS_AS(g_optimal(std::vector<VectorXd>{}), std::invalid_argument);
  std::vector<VectorXd> mixed{VectorXd::Zero(2), VectorXd::Zero(3)};
  CHECK_THROWS_AS(g_optimal(mixed), std::invalid_argument);
}

TEST_CASE("scaled sets reassemble the information block exactly") {
  Rng rng(90);
  const int K = 3, d = 4;
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams theta(rng.gaussian_vector(K * d), K, d, 10.0);
    VectorXd x = rng.gaussian_vector(d);
    x /= std::max(1.0, x.norm());
    ArmSet arms{Arm(x)};
    double bval = 1.0 + 3.0 * rng.uniform();
    std::vector<double> b{bval};
    auto sets = build_scaled_sets(arms, theta, b);
    REQUIRE(sets.size() == K);
    MatrixXd recon = MatrixXd::Zero(K * d, K * d);
    for (int i = 0; i < K; ++i) {
      REQUIRE(sets[i].size() == 1);
      CHECK(sets[i][0].arm_index == 0);
      CHECK(sets[i][0].direction == i + 1);
      CHECK(sets[i][0].vec.norm() <= x.norm() + 1e-12);
      recon.noalias() += sets[i][0].vec * sets[i][0].vec.transpose();
    }
    MatrixXd expected =
        kron(link_gradient(arms[0], theta), x * x.transpose()) / bval;
    CHECK((recon - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("scaled sets reject invalid B values") {
  ModelParams theta(VectorXd::Zero(4), 2, 2, 1.0);
  ArmSet arms{Arm(VectorXd::Unit(2, 0))};
  std::vector<double> short_b;
  CHECK_THROWS_AS(build_scaled_sets(arms, theta, short_b),
                  std::invalid_argument);
  std::vector<double> small_b{0.5};
  CHECK_THROWS_AS(build_scaled_sets(arms, theta, small_b),
                  std::invalid_argument);
}

TEST_CASE("uniform policy and sampling") {
  Rng rng(11);
  ArmSet arms = random_arms(rng, 4, 3);
  UniformPolicy up;
  auto w = up.weights_for(arms);
  w.validate(4);
  for (int i = 0; i < 4; ++i) CHECK(w.weight_of(i) == doctest::Approx(0.25));

  std::vector<int> counts(4, 0);
  for (int t = 0; t < 20000; ++t) ++counts[sample_arm(up, arms, rng)];
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(counts[i] / 20000.0 - 0.25) < 0.02);
  }
}

TEST_CASE("per-set g-optimal policy matches the direct solver and caches") {
  Rng rng(313);
  ArmSet arms = random_arms(rng, 8, 3);
  GOptimalPerSetPolicy policy;
  auto w1 = policy.weights_for(arms);
  auto direct = g_optimal(arms).weights;
  REQUIRE(w1.support.size() == direct.support.size());
  for (std::size_t i = 0; i < w1.support.size(); ++i) {
    CHECK(w1.support[i].first == direct.support[i].first);
    CHECK(w1.support[i].second == doctest::Approx(direct.support[i].second));
  }
  auto w2 = policy.weights_for(arms);  // served from cache
  REQUIRE(w2.support.size() == w1.support.size());
  for (std::size_t i = 0; i < w1.support.size(); ++i) {
    CHECK(w2.support[i].second == w1.support[i].second);
  }
}

TEST_CASE("distributional design reduces to g-optimal on a fixed context") {
  Rng rng(404);
  auto pts = random_points(rng, 6, 3);
  std::vector<std::vector<VectorXd>> samples(5, pts);
  DistributionalDesign dd(samples, {}, rng.fork(1));
  CHECK_FALSE(dd.degenerate());
  auto w = dd.weights_for(pts);
  auto g = g_optimal(pts).weights.dense(6);
  auto wd = w.dense(6);
  for (int i = 0; i < 6; ++i) {
    CHECK(wd[i] == doctest::Approx(g[i]).epsilon(1e-6));
  }
}

TEST_CASE("distributional design dominates half the per-set g-optimal") {
  Rng rng(405);
  std::vector<std::vector<VectorXd>> samples;
  for (int s = 0; s < 8; ++s) samples.push_back(random_points(rng, 7, 4));
  DistributionalDesign dd(samples, {}, rng.fork(9));
  for (int trial = 0; trial < 5; ++trial) {
    auto presented = random_points(rng, 7, 4);
    auto w = dd.weights_for(presented);
    w.validate(7);
    auto g = g_optimal(presented).weights.dense(7);
    auto wd = w.dense(7);
    for (int i = 0; i < 7; ++i) {
      CHECK(wd[i] >= 0.5 * g[i] - 1e-12);
    }
  }
}

TEST_CASE("distributional design pools singleton contexts") {
  std::vector<std::vector<VectorXd>> samples;
  for (int i = 0; i < 4; ++i) {
    samples.push_back({VectorXd::Unit(4, i)});
  }
  Rng rng(42);
  DistributionalDesign dd(samples, {}, rng);
  CHECK_FALSE(dd.degenerate());
  // Atom mass sums to one, so the pooled information has unit trace for
  // unit-norm atoms.
  CHECK(dd.pooled_information().trace() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("distributional design survives an all-zero pool") {
  std::vector<std::vector<VectorXd>> samples(3, {VectorXd::Zero(3)});
  Rng rng(7);
  DistributionalDesign dd(samples, {}, rng);
  CHECK(dd.degenerate());
  auto presented = random_points(rng, 4, 3);
  auto w = dd.weights_for(presented);
  w.validate(4);
}

TEST_CASE("distributional design is deterministic in the rng") {
  Rng rng(606);
  std::vector<std::vector<VectorXd>> samples;
  for (int s = 0; s < 6; ++s) samples.push_back(random_points(rng, 5, 3));
  auto presented = random_points(rng, 5, 3);
  DistributionalDesign d1(samples, {}, Rng(99));
  DistributionalDesign d2(samples, {}, Rng(99));
  auto w1 = d1.weights_for(presented).dense(5);
  auto w2 = d2.weights_for(presented).dense(5);
  for (int i = 0; i < 5; ++i) CHECK(w1[i] == w2[i]);
}

TEST_CASE("raw distributional policy wraps arm sets") {
  Rng rng(17);
  std::vector<ArmSet> contexts;
  for (int s = 0; s < 6; ++s) contexts.push_back(random_arms(rng, 5, 3));
  auto policy = distributional_design(contexts, {}, rng.fork(3));
  auto w = policy->weights_for(contexts[0]);
  w.validate(5);
  int idx = sample_arm(*policy, contexts[0], rng);
  CHECK(idx >= 0);
  CHECK(idx < 5);
}

TEST_CASE("mnl mixture policy blends K+1 valid components") {
  Rng rng(808);
  const int K = 2, d = 3;
  std::vector<ArmSet> contexts;
  for (int s = 0; s < 6; ++s) contexts.push_back(random_arms(rng, 5, d));
  ModelParams theta(0.3 * rng.gaussian_vector(K * d), K, d, 2.0);
  SelfConcordanceScaler scaler{1.0, 4.0, DesignMatrixV(d, 1.0), 2.0,
                               ScalingVariant::batched};

  auto policy = mnl_design_policy(contexts, theta, scaler, {}, rng.fork(5));
  CHECK(policy->component_count() == K + 1);
  CHECK(policy->mixing_weight() == doctest::Approx(1.0 / (K + 1)));

  for (int trial = 0; trial < 3; ++trial) {
    ArmSet presented = random_arms(rng, 5, d);
    auto w = policy->weights_for(presented);
    w.validate(5);
    // The raw component alone guarantees a third of half the g-optimal mass.
    auto g = g_optimal(presented).weights.dense(5);
    auto wd = w.dense(5);
    for (int i = 0; i < 5; ++i) {
      CHECK(wd[i] >= policy->mixing_weight() * 0.5 * g[i] - 1e-12);
    }
  }

  // content-addressed cache returns bit-identical weights
  ArmSet again = contexts[2];
  auto wa = policy->weights_for(again).dense(5);
  auto wb = policy->weights_for(again).dense(5);
  for (int i = 0; i < 5; ++i) CHECK(wa[i] == wb[i]);
}

TEST_CASE("mnl mixture policy is deterministic in the rng") {
  Rng rng(909);
  const int K = 2, d = 3;
  std::vector<ArmSet> contexts;
  for (int s = 0; s < 5; ++s) contexts.push_back(random_arms(rng, 4, d));
  ModelParams theta(0.2 * rng.gaussian_vector(K * d), K, d, 2.0);
  SelfConcordanceScaler scaler{0.5, 4.0, DesignMatrixV(d, 1.0), 2.0,
                               ScalingVariant::rarely_switching};
  auto p1 = mnl_design_policy(contexts, theta, scaler, {}, Rng(31));
  auto p2 = mnl_design_policy(contexts, theta, scaler, {}, Rng(31));
  ArmSet presented = random_arms(rng, 4, d);
  auto w1 = p1->weights_for(presented).dense(4);
  auto w2 = p2->weights_for(presented).dense(4);
  for (int i = 0; i < 4; ++i) CHECK(w1[i] == w2[i]);
}
