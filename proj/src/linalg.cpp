#include "mnlb/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace mnlb {

double logdet_spd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("logdet_spd: matrix is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double inv_quad(const Eigen::LLT<MatrixXd>& llt, const VectorXd& x) {
  return x.dot(llt.solve(x));
}

MatrixXd sqrt_psd(const MatrixXd& m, double clamp_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("sqrt_psd: eigendecomposition failed");
  }
  VectorXd vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    vals[i] = vals[i] < clamp_tol ? 0.0 : std::sqrt(vals[i]);
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

double min_eig_sym(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(m, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double max_eig_sym(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(m, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

}  // namespace mnlb
