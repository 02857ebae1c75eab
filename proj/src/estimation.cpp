#include "mnlb/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace mnlb {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Per-record pieces shared by loss/gradient/hessian: probabilities and the
// log-partition, computed from the linear predictors with max subtraction.
struct RecordModel {
  VectorXd z;
  double log_partition;  // log(1 + sum_i exp(u_i))
  VectorXd u;            // linear predictors, u_i = x^T theta_i
};

RecordModel record_model(const ModelParams& p, const Arm& arm) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      th(p.theta.data(), p.K, p.d);
  VectorXd u = th * arm.x();
  double m = std::max(0.0, u.maxCoeff());
  VectorXd e = (u.array() - m).exp();
  double denom = std::exp(-m) + e.sum();
  return {e / denom, m + std::log(denom), u};
}

// Single data pass for the solver: loss and gradient always, curvature only
// when the caller is about to factor it. Matches the arithmetic of
// nll_loss/nll_gradient/nll_hessian term for term; the separate entry points
// stay as the reference implementations.
double nll_sweep(const VectorXd& theta, int K, int d,
                 std::span<const InteractionRecord> data, double lambda,
                 VectorXd& g, MatrixXd* h) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      th(theta.data(), K, d);
  double loss = 0.5 * lambda * theta.squaredNorm();
  g = lambda * theta;
  if (h != nullptr) {
    h->setZero();
    h->diagonal().setConstant(lambda);
  }
  VectorXd u(K), z(K);
  MatrixXd outer(d, d);
  for (const InteractionRecord& rec : data) {
    const VectorXd& x = rec.arm.x();
    u.noalias() = th * x;
    double m = std::max(0.0, u.maxCoeff());
    z = (u.array() - m).exp();
    double denom = std::exp(-m) + z.sum();
    double log_partition = m + std::log(denom);
    z /= denom;
    loss -= (rec.outcome == 0 ? 0.0 : u[rec.outcome - 1]) - log_partition;
    for (int i = 0; i < K; ++i) {
      double r = z[i] - (rec.outcome == i + 1 ? 1.0 : 0.0);
      g.segment(i * d, d).noalias() += r * x;
    }
    if (h != nullptr) {
      outer.noalias() = x * x.transpose();
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          double a = (i == j ? z[i] : 0.0) - z[i] * z[j];
          h->block(i * d, j * d, d, d).noalias() += a * outer;
        }
      }
    }
  }
  return loss;
}

}  // namespace

DesignMatrixV::DesignMatrixV(int d, double lambda)
    : v_(MatrixXd::Identity(d, d) * lambda), lambda_(lambda), count_(0) {
  require(d >= 1, "DesignMatrixV: d must be >= 1");
  require(lambda > 0.0, "DesignMatrixV: lambda must be positive");
}

void DesignMatrixV::add(const VectorXd& x) {
  require(x.size() == v_.rows(), "DesignMatrixV::add: dimension mismatch");
  v_.noalias() += x * x.transpose();
  ++count_;
  llt_fresh_ = false;
}

double DesignMatrixV::inv_norm(const VectorXd& x) const {
  require(x.size() == v_.rows(), "DesignMatrixV::inv_norm: dimension mismatch");
  if (!llt_fresh_) {
    llt_.compute(v_);
    llt_fresh_ = true;
  }
  return std::sqrt(std::max(0.0, x.dot(llt_.solve(x))));
}

ScaledHessian::ScaledHessian(int K, int d, double lambda, HessianKind kind)
    : h_(MatrixXd::Identity(K * d, K * d) * lambda),
      lambda_(lambda),
      kind_(kind),
      K_(K),
      d_(d),
      outer_(d, d) {
  require(K >= 1 && d >= 1, "ScaledHessian: bad dimensions");
  require(lambda > 0.0, "ScaledHessian: lambda must be positive");
}

void ScaledHessian::add_term(const MatrixXd& a, const VectorXd& x, double b) {
  require(a.rows() == K_ && a.cols() == K_, "ScaledHessian: A must be K x K");
  require(x.size() == d_, "ScaledHessian: x must be d-dimensional");
  require(b >= 1.0, "ScaledHessian: scaling factor must be >= 1");
  outer_ = (x * x.transpose()) / b;
  for (int i = 0; i < K_; ++i) {
    for (int j = 0; j < K_; ++j) {
      h_.block(i * d_, j * d_, d_, d_).noalias() += a(i, j) * outer_;
    }
  }
}

double ScaledHessian::logdet() const { return logdet_spd(h_); }

ConfidenceRadius confidence_radius_batched(double S, int K, int d, double T,
                                           double lambda, double c_gamma) {
  require(S > 0 && K >= 1 && d >= 1 && T > 1, "confidence_radius: bad inputs");
  require(lambda > 0, "confidence_radius_batched: lambda must be positive");
  require(c_gamma > 0, "confidence_radius: c_gamma must be positive");
  double base = std::log(T) + static_cast<double>(K) * d;
  double gamma = 12.0 * S * std::sqrt(base) +
                 8.0 * S * base / std::sqrt(lambda) +
                 2.0 * std::pow(S, 1.5) * std::sqrt(lambda);
  return {c_gamma * gamma, RadiusFlavor::batched, S, K, d, T, lambda, 0.0, 0.0,
          c_gamma};
}

ConfidenceRadius confidence_radius_rs(double S, int K, int d, double T,
                                      double delta, double C, double c_gamma) {
  require(S > 0 && K >= 1 && d >= 1 && T > 0, "confidence_radius: bad inputs");
  require(delta > 0 && delta < 1, "confidence_radius_rs: delta must be in (0,1)");
  require(T / delta > 1, "confidence_radius_rs: T/delta must exceed 1");
  require(C > 0, "confidence_radius_rs: C must be positive");
  require(c_gamma > 0, "confidence_radius: c_gamma must be positive");
  double gamma = C * std::pow(S, 1.25) *
                 std::sqrt(static_cast<double>(K) * d * std::log(T / delta));
  return {c_gamma * gamma, RadiusFlavor::rarely_switching, S, K, d, T, 0.0,
          delta, C, c_gamma};
}

KappaEstimate estimate_kappa(const std::vector<ArmSet>& arm_sets, double S,
                             int K, int n_samples, Rng& rng) {
  require(!arm_sets.empty(), "estimate_kappa: no arm sets");
  require(S > 0 && K >= 1 && n_samples >= 1, "estimate_kappa: bad inputs");
  int d = arm_sets.front().front().dim();
  double worst = 1.0;
  auto probe = [&](const VectorXd& theta) {
    ModelParams p(theta, K, d, S);
    for (const ArmSet& set : arm_sets) {
      for (const Arm& arm : set) {
        double lmin = min_eig_sym(link_gradient(arm, p));
        if (lmin > 0.0) worst = std::max(worst, 1.0 / lmin);
      }
    }
  };
  probe(VectorXd::Zero(K * d));
  for (int s = 0; s < n_samples; ++s) probe(rng.uniform_in_ball(K * d, S));
  return {worst, true};
}

double nll_loss(const ModelParams& params,
                std::span<const InteractionRecord> data, double lambda) {
  require(lambda >= 0.0, "nll_loss: lambda must be nonnegative");
  double loss = 0.5 * lambda * params.theta.squaredNorm();
  for (const InteractionRecord& rec : data) {
    RecordModel rm = record_model(params, rec.arm);
    require(rec.outcome >= 0 && rec.outcome <= params.K,
            "nll_loss: outcome out of range");
    double log_zy =
        (rec.outcome == 0 ? 0.0 : rm.u[rec.outcome - 1]) - rm.log_partition;
    loss -= log_zy;
  }
  return loss;
}

VectorXd nll_gradient(const ModelParams& params,
                      std::span<const InteractionRecord> data, double lambda) {
  require(lambda >= 0.0, "nll_gradient: lambda must be nonnegative");
  VectorXd g = lambda * params.theta;
  for (const InteractionRecord& rec : data) {
    RecordModel rm = record_model(params, rec.arm);
    VectorXd resid = rm.z - response_indicator(rec.outcome, params.K);
    g.noalias() += kron_vec(resid, rec.arm.x());
  }
  return g;
}

MatrixXd nll_hessian(const ModelParams& params,
                     std::span<const InteractionRecord> data, double lambda) {
  require(lambda >= 0.0, "nll_hessian: lambda must be nonnegative");
  int K = params.K, d = params.d;
  MatrixXd h = MatrixXd::Identity(K * d, K * d) * lambda;
  for (const InteractionRecord& rec : data) {
    RecordModel rm = record_model(params, rec.arm);
    MatrixXd a = MatrixXd(rm.z.asDiagonal()) - rm.z * rm.z.transpose();
    MatrixXd outer = rec.arm.x() * rec.arm.x().transpose();
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        h.block(i * d, j * d, d, d).noalias() += a(i, j) * outer;
      }
    }
  }
  return h;
}

MleResult fit_mle(std::span<const InteractionRecord> data, int K, int d,
                  double S, double lambda, const MleOptions& opts,
                  const VectorXd* warm_start) {
  require(K >= 1 && d >= 1 && S > 0, "fit_mle: bad dimensions");
  require(lambda > 0.0, "fit_mle: lambda must be positive");
  for (const InteractionRecord& rec : data) {
    require(rec.arm.dim() == d, "fit_mle: record dimension mismatch");
    require(rec.outcome >= 0 && rec.outcome <= K,
            "fit_mle: outcome out of range");
  }
  VectorXd theta =
      warm_start != nullptr ? *warm_start : VectorXd::Zero(K * d);
  require(theta.size() == static_cast<long>(K) * d,
          "fit_mle: warm start size mismatch");

  ModelParams params(theta, K, d, S);
  const long n = static_cast<long>(K) * d;
  VectorXd g(n), g_cand(n);
  MatrixXd h(n, n);
  double loss = nll_sweep(params.theta, K, d, data, lambda, g, nullptr);
  int iter = 0;
  while (g.norm() > opts.tol && iter < opts.max_iters) {
    nll_sweep(params.theta, K, d, data, lambda, g, &h);
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      return {params, g.norm(), iter, false};
    }
    VectorXd step = -llt.solve(g);
    double slope = g.dot(step);
    // Armijo certification needs loss differences above float noise; once the
    // Newton decrement g^T H^-1 g drops to that floor, line search is
    // meaningless and the pure Newton step is the right move (we are inside
    // the quadratic basin of a lambda-strongly-convex objective).
    bool pure_newton = -slope <= 1e-9 * (1.0 + std::abs(loss));
    if (!pure_newton) {
      double alpha = 1.0;
      VectorXd candidate = params.theta + alpha * step;
      double new_loss = nll_sweep(candidate, K, d, data, lambda, g_cand, nullptr);
      int shrinks = 0;
      while (new_loss > loss + opts.armijo_c * alpha * slope && shrinks < 64) {
        alpha *= opts.backtrack;
        candidate = params.theta + alpha * step;
        new_loss = nll_sweep(candidate, K, d, data, lambda, g_cand, nullptr);
        ++shrinks;
      }
      if (shrinks >= 64 && new_loss >= loss) {
        pure_newton = true;  // search stalled on noise without progress
      } else {
        params.theta = candidate;
        loss = new_loss;
        g.swap(g_cand);  // gradient at the accepted point came with its sweep
      }
    }
    if (pure_newton) {
      params.theta += step;
      loss = nll_sweep(params.theta, K, d, data, lambda, g, nullptr);
    }
    ++iter;
  }
  return {params, g.norm(), iter, g.norm() <= opts.tol};
}

double scaling_factor(const VectorXd& x, double gamma, double kappa,
                      const DesignMatrixV& v, double S, ScalingVariant variant) {
  require(gamma >= 0.0, "scaling_factor: gamma must be nonnegative");
  require(kappa >= 1.0, "scaling_factor: kappa must be >= 1");
  require(S > 0.0, "scaling_factor: S must be positive");
  double c = variant == ScalingVariant::batched ? 1.0 : 2.0;
  double arg =
      std::min(c * gamma * std::sqrt(kappa) * v.inv_norm(x), 2.0 * S);
  return std::exp(std::sqrt(6.0) * arg);
}

ScaledHessian build_scaled_hessian(std::span<const InteractionRecord> data,
                                   const ModelParams& theta_hat, double lambda,
                                   std::span<const double> b_values) {
  require(b_values.size() == data.size(),
          "build_scaled_hessian: one scaling factor per record required");
  const int K = theta_hat.K, d = theta_hat.d;
  ScaledHessian h(K, d, lambda, HessianKind::proxy);
  // Inline link_gradient with reused buffers; the per-record A matrices are
  // never needed individually, only their scaled sum.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      th(theta_hat.theta.data(), K, d);
  VectorXd u(K), z(K);
  MatrixXd a(K, K);
  for (std::size_t s = 0; s < data.size(); ++s) {
    const VectorXd& x = data[s].arm.x();
    require(x.size() == d, "build_scaled_hessian: record dimension mismatch");
    u.noalias() = th * x;
    double m = std::max(0.0, u.maxCoeff());
    z = (u.array() - m).exp();
    z /= std::exp(-m) + z.sum();
    a.noalias() = -(z * z.transpose());
    a.diagonal() += z;
    h.add_term(a, x, b_values[s]);
  }
  return h;
}

}  // namespace mnlb
