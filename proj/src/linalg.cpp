#include "disfilter/linalg.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "disfilter/errors.hpp"

namespace disfilter {

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  // ‖M‖₂² = λ_max(MᵀM); cheaper than a full SVD for the repeated calls in
  // the contraction search.
  const MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1)));
}

MatrixXd psd_sqrt(const MatrixXd& cov, double tol) {
  if (cov.rows() != cov.cols()) throw ConfigError("covariance must be square");
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(cov));
  const VectorXd& lambda = es.eigenvalues();
  if (lambda(0) < -tol) {
    std::ostringstream msg;
    msg << "covariance is not positive semidefinite: eigenvalue " << lambda(0);
    throw ConfigError(msg.str());
  }
  const VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd spd_solve(const MatrixXd& s, const MatrixXd& rhs, std::string_view what) {
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);

  const double jitter = 1e-12 * s.trace() / static_cast<double>(s.rows());
  if (jitter > 0.0 && std::isfinite(jitter)) {
    MatrixXd shifted = s;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
  }
  std::ostringstream msg;
  msg << what << ": matrix is not positive definite (smallest eigenvalue "
      << min_eigenvalue(symmetrize(s)) << ")";
  throw NumericalError(msg.str());
}

MatrixXd spd_inverse(const MatrixXd& s, std::string_view what) {
  return spd_solve(s, MatrixXd::Identity(s.rows(), s.cols()), what);
}

}  // namespace disfilter
