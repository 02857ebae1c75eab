#pragma once

#include <vector>

#include "mnlb/linalg.hpp"
#include "mnlb/rng.hpp"

namespace mnlb {

/// One action's feature vector; ||x|| <= 1 up to rounding slack.
struct Arm {
  explicit Arm(VectorXd features);
  const VectorXd& x() const { return x_; }
  int dim() const { return static_cast<int>(x_.size()); }

 private:
  VectorXd x_;
};

using ArmSet = std::vector<Arm>;

/// Stacked multinomial-logit parameter theta = (theta_1; ...; theta_K),
/// theta_i in R^d. S is the configured norm bound; it is enforced where a
/// ground-truth parameter is constructed, while estimates may exceed it
/// (their norm is observable, never clipped).
struct ModelParams {
  ModelParams(VectorXd theta_in, int K_in, int d_in, double S_in);

  VectorXd theta;
  int K;
  int d;
  double S;

  VectorXd coef(int i) const { return theta.segment(i * d, d); }  // zero-based
  double norm() const { return theta.norm(); }
};

/// Probabilities of outcomes 1..K (z) and the null outcome (z0).
struct OutcomeProbabilities {
  VectorXd z;
  double z0;
};

/// Nonnegative per-outcome rewards for outcomes 1..K; the null outcome pays 0.
struct RewardVector {
  RewardVector(VectorXd rho_in, double R_in);

  VectorXd rho;
  double R;  // norm bound, ||rho|| <= R
};

/// Softmax over the K linear predictors plus the implicit zero logit of the
/// null outcome, computed with max-logit subtraction.
OutcomeProbabilities probabilities(const Arm& arm, const ModelParams& params);

/// Gradient of the link: A(x, theta) = diag(z) - z z^T, K x K symmetric PSD.
MatrixXd link_gradient(const Arm& arm, const ModelParams& params);

/// rho^T z(x, theta).
double expected_reward(const Arm& arm, const ModelParams& params,
                       const RewardVector& reward);

/// Draw an outcome in {0, 1, ..., K} from the model's categorical law.
int sample_outcome(const Arm& arm, const ModelParams& params, Rng& rng);

/// One-hot indicator over outcomes 1..K; the all-zero vector for outcome 0.
VectorXd response_indicator(int outcome, int K);

MatrixXd kron(const MatrixXd& a, const MatrixXd& b);
VectorXd kron_vec(const VectorXd& a, const VectorXd& b);

}  // namespace mnlb
