#pragma once

#include <Eigen/Dense>

namespace mnlb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// log det of a symmetric positive-definite matrix via Cholesky.
double logdet_spd(const MatrixXd& m);

/// x^T M^{-1} x through a precomputed Cholesky factorization.
double inv_quad(const Eigen::LLT<MatrixXd>& llt, const VectorXd& x);

/// Symmetric PSD square root; eigenvalues below clamp_tol are clamped to 0.
MatrixXd sqrt_psd(const MatrixXd& m, double clamp_tol = 1e-12);

/// Smallest eigenvalue of a symmetric matrix.
double min_eig_sym(const MatrixXd& m);

/// Largest eigenvalue of a symmetric matrix.
double max_eig_sym(const MatrixXd& m);

}  // namespace mnlb
