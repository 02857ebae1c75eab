#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnlb/mnl.hpp"

namespace mnlb {

/// One logged (arm, outcome) interaction; outcome 0 is the null event.
struct InteractionRecord {
  Arm arm;
  int outcome;
  long round;
};

/// Unscaled design matrix V = lambda I + sum x x^T, d x d.
class DesignMatrixV {
 public:
  DesignMatrixV(int d, double lambda);

  void add(const VectorXd& x);
  double inv_norm(const VectorXd& x) const;  // ||x||_{V^{-1}}
  const MatrixXd& matrix() const { return v_; }
  double lambda() const { return lambda_; }
  long count() const { return count_; }

 private:
  MatrixXd v_;
  double lambda_;
  long count_;
  // Factorization cache: add() invalidates, inv_norm() refreshes on demand,
  // so a sweep of norms between updates factors v_ once instead of per call.
  mutable Eigen::LLT<MatrixXd> llt_;
  mutable bool llt_fresh_ = false;
};

enum class HessianKind { optimal, proxy, per_direction };

/// Kd x Kd Hessian-style matrix: lambda I plus a sum of A kron x x^T terms,
/// each optionally deflated by its self-concordance factor B.
class ScaledHessian {
 public:
  ScaledHessian(int K, int d, double lambda, HessianKind kind);

  /// h += (a / b) kron (x x^T)
  void add_term(const MatrixXd& a, const VectorXd& x, double b = 1.0);

  const MatrixXd& matrix() const { return h_; }
  double lambda() const { return lambda_; }
  HessianKind kind() const { return kind_; }
  double logdet() const;

 private:
  MatrixXd h_;
  double lambda_;
  HessianKind kind_;
  int K_;
  int d_;
  MatrixXd outer_;  // add_term scratch, keeps the accumulation loop allocation-free
};

enum class RadiusFlavor { batched, rarely_switching };

/// Confidence radius gamma together with the inputs that produced it.
struct ConfidenceRadius {
  double gamma;
  RadiusFlavor flavor;
  double S;
  int K;
  int d;
  double T;        // horizon (real-valued so log T can be probed exactly)
  double lambda;   // batched flavor input
  double delta;    // rarely-switching flavor input
  double C;        // rarely-switching leading constant
  double c_gamma;  // experiment-side multiplier, 1 for theory checks
};

ConfidenceRadius confidence_radius_batched(double S, int K, int d, double T,
                                           double lambda, double c_gamma = 1.0);
ConfidenceRadius confidence_radius_rs(double S, int K, int d, double T,
                                      double delta, double C,
                                      double c_gamma = 1.0);

/// Worst-case inverse curvature of the link over a parameter ball.
struct KappaEstimate {
  double kappa;  // >= 1
  bool sampled;  // true when obtained by sampling, false when configured
};

/// Max of 1/lambda_min(A(x, theta)) over all arms in the given sets and over
/// theta = 0 plus n_samples draws uniform in the radius-S ball of R^{Kd}.
KappaEstimate estimate_kappa(const std::vector<ArmSet>& arm_sets, double S,
                             int K, int n_samples, Rng& rng);

double nll_loss(const ModelParams& params,
                std::span<const InteractionRecord> data, double lambda);
VectorXd nll_gradient(const ModelParams& params,
                      std::span<const InteractionRecord> data, double lambda);
MatrixXd nll_hessian(const ModelParams& params,
                     std::span<const InteractionRecord> data, double lambda);

struct MleOptions {
  double tol = 1e-10;       // gradient sup-norm target
  int max_iters = 100;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

struct MleResult {
  ModelParams params;
  double grad_norm;
  int iterations;
  bool converged;
};

/// Thrown by callers that require a converged fit.
struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& msg, double grad_norm_in, int iterations_in)
      : std::runtime_error(msg),
        grad_norm(grad_norm_in),
        iterations(iterations_in) {}
  double grad_norm;
  int iterations;
};

/// Damped Newton with backtracking line search on the regularized NLL.
/// Never projects onto the S-ball; the returned norm is observable instead.
MleResult fit_mle(std::span<const InteractionRecord> data, int K, int d,
                  double S, double lambda, const MleOptions& opts = {},
                  const VectorXd* warm_start = nullptr);

enum class ScalingVariant { batched, rarely_switching };

/// Self-concordance deflation B(x) = exp(sqrt(6) * min{c * gamma * sqrt(kappa)
/// * ||x||_{V^{-1}}, 2S}) with c = 1 (batched) or c = 2 (rarely switching).
double scaling_factor(const VectorXd& x, double gamma, double kappa,
                      const DesignMatrixV& v, double S, ScalingVariant variant);

/// lambda I + sum A(x_s, theta_hat) kron x_s x_s^T / b_values[s].
ScaledHessian build_scaled_hessian(std::span<const InteractionRecord> data,
                                   const ModelParams& theta_hat, double lambda,
                                   std::span<const double> b_values);

}  // namespace mnlb
