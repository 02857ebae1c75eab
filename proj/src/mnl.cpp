#include "mnlb/mnl.hpp"

#include <cmath>
#include <stdexcept>

namespace mnlb {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

VectorXd logits(const Arm& arm, const ModelParams& p) {
  // Row i of the K x d view of theta is theta_i^T.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      th(p.theta.data(), p.K, p.d);
  return th * arm.x();
}

}  // namespace

Arm::Arm(VectorXd features) : x_(std::move(features)) {
  require(x_.size() > 0, "Arm: empty feature vector");
  require(x_.allFinite(), "Arm: non-finite feature");
  require(x_.norm() <= 1.0 + 1e-9, "Arm: feature norm exceeds 1");
}

ModelParams::ModelParams(VectorXd theta_in, int K_in, int d_in, double S_in)
    : theta(std::move(theta_in)), K(K_in), d(d_in), S(S_in) {
  require(K >= 1, "ModelParams: K must be >= 1");
  require(d >= 1, "ModelParams: d must be >= 1");
  require(S > 0.0, "ModelParams: S must be positive");
  require(theta.size() == static_cast<long>(K) * d,
          "ModelParams: theta size != K*d");
  require(theta.allFinite(), "ModelParams: non-finite theta");
}

RewardVector::RewardVector(VectorXd rho_in, double R_in)
    : rho(std::move(rho_in)), R(R_in) {
  require(rho.size() > 0, "RewardVector: empty rho");
  require(rho.allFinite(), "RewardVector: non-finite rho");
  require(rho.minCoeff() >= 0.0, "RewardVector: negative entry");
  require(R > 0.0, "RewardVector: R must be positive");
  require(rho.norm() <= R + 1e-9, "RewardVector: ||rho|| exceeds R");
}

OutcomeProbabilities probabilities(const Arm& arm, const ModelParams& params) {
  require(arm.dim() == params.d, "probabilities: arm/theta dimension mismatch");
  VectorXd u = logits(arm, params);
  double m = std::max(0.0, u.maxCoeff());
  VectorXd e = (u.array() - m).exp();
  double e0 = std::exp(-m);
  double denom = e0 + e.sum();
  return {e / denom, e0 / denom};
}

MatrixXd link_gradient(const Arm& arm, const ModelParams& params) {
  VectorXd z = probabilities(arm, params).z;
  MatrixXd a = MatrixXd(z.asDiagonal()) - z * z.transpose();
  return a;
}

double expected_reward(const Arm& arm, const ModelParams& params,
                       const RewardVector& reward) {
  require(reward.rho.size() == params.K,
          "expected_reward: rho/K dimension mismatch");
  return reward.rho.dot(probabilities(arm, params).z);
}

int sample_outcome(const Arm& arm, const ModelParams& params, Rng& rng) {
  OutcomeProbabilities p = probabilities(arm, params);
  double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < params.K; ++i) {
    cum += p.z[i];
    if (u < cum) return i + 1;
  }
  return 0;
}

VectorXd response_indicator(int outcome, int K) {
  if (outcome < 0 || outcome > K) {
    throw std::invalid_argument("response_indicator: outcome out of range");
  }
  VectorXd m = VectorXd::Zero(K);
  if (outcome > 0) m[outcome - 1] = 1.0;
  return m;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

VectorXd kron_vec(const VectorXd& a, const VectorXd& b) {
  VectorXd out(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a[i] * b;
  }
  return out;
}

}  // namespace mnlb
