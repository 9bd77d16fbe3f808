#include "disfilter/analysis.hpp"

#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "disfilter/errors.hpp"

namespace disfilter {
namespace {

using ComplexMatrix = Eigen::MatrixXcd;

// σ_min > tol·σ_max for a tall complex matrix with `cols` columns.
bool full_column_rank(const ComplexMatrix& m, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() < m.cols()) return false;
  const double largest = s(0);
  if (largest == 0.0) return false;
  return s(s.size() - 1) > tol * largest;
}

// PBH rank test on [λI − A; H] at every marginal or unstable eigenvalue.
bool pbh_rank_test(const MatrixXd& a, const MatrixXd& h, double tol) {
  if (a.rows() != a.cols()) throw ConfigError("A must be square");
  if (h.cols() != a.cols()) throw ConfigError("H must have one column per state");
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<MatrixXd> es(a, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda) < 1.0 - kUnitCircleMargin) continue;
    ComplexMatrix stacked(n + h.rows(), n);
    stacked.topRows(n) = lambda * ComplexMatrix::Identity(n, n) - a.cast<std::complex<double>>();
    stacked.bottomRows(h.rows()) = h.cast<std::complex<double>>();
    if (!full_column_rank(stacked, tol)) return false;
  }
  return true;
}

}  // namespace

ErrorVector stack_errors(std::span<const VectorXd> per_node) {
  if (per_node.empty()) return ErrorVector();
  const Eigen::Index n = per_node.front().size();
  ErrorVector out(n * static_cast<Eigen::Index>(per_node.size()));
  for (std::size_t l = 0; l < per_node.size(); ++l) {
    if (per_node[l].size() != n) {
      std::ostringstream msg;
      msg << "node " << l << " error has dimension " << per_node[l].size() << ", expected " << n;
      throw ConfigError(msg.str());
    }
    out.segment(static_cast<Eigen::Index>(l) * n, n) = per_node[l];
  }
  return out;
}

std::vector<VectorXd> unstack_errors(const ErrorVector& stacked, int node_count) {
  if (node_count < 1 || stacked.size() % node_count != 0)
    throw ConfigError("stacked error length is not a multiple of the node count");
  const Eigen::Index n = stacked.size() / node_count;
  std::vector<VectorXd> out;
  for (int l = 0; l < node_count; ++l) out.push_back(stacked.segment(l * n, n));
  return out;
}

StackedErrorSystem build_stacked_system(const CombinationMatrix& c, std::span<const MatrixXd> gains,
                                        std::span<const NodeObservationModel> observers,
                                        const StateSpaceModel& model) {
  const int nodes = c.size();
  const Eigen::Index n = model.state_dim();
  if (static_cast<int>(gains.size()) != nodes || static_cast<int>(observers.size()) != nodes)
    throw ConfigError("one gain and one observer are required per node");
  Eigen::Index obs_total = 0;
  for (int l = 0; l < nodes; ++l) {
    const auto& o = observers[l];
    if (o.state_dim() != n || gains[l].rows() != n || gains[l].cols() != o.obs_dim()) {
      std::ostringstream msg;
      msg << "node " << l << ": gain or observation matrix has the wrong dimension";
      throw ConfigError(msg.str());
    }
    obs_total += o.obs_dim();
  }

  StackedErrorSystem sys;
  sys.node_count = nodes;
  sys.state_dim = n;
  const Eigen::Index big = nodes * n;
  sys.C_cal = MatrixXd::Zero(big, big);
  sys.F_cal = MatrixXd::Zero(big, big);
  sys.P_cal = MatrixXd::Zero(big, big);
  sys.G_cal = MatrixXd::Zero(big, obs_total);
  const MatrixXd identity = MatrixXd::Identity(n, n);
  Eigen::Index col = 0;
  for (int l = 0; l < nodes; ++l) {
    for (int i = 0; i < nodes; ++i) {
      if (c(l, i) != 0.0) sys.C_cal.block(l * n, i * n, n, n) = c(l, i) * identity;
    }
    const MatrixXd correction = identity - gains[l] * observers[l].H();
    sys.P_cal.block(l * n, l * n, n, n) = correction;
    sys.F_cal.block(l * n, l * n, n, n) = correction * model.A();
    sys.G_cal.block(l * n, col, n, observers[l].obs_dim()) = gains[l];
    col += observers[l].obs_dim();
  }
  return sys;
}

ErrorVector error_recursion_step(const StackedErrorSystem& sys, const ErrorVector& e,
                                 const VectorXd& process_noise,
                                 const VectorXd& observation_noises) {
  const Eigen::Index big = sys.C_cal.rows();
  if (e.size() != big || process_noise.size() != sys.state_dim ||
      observation_noises.size() != sys.G_cal.cols()) {
    throw ConfigError("dimension mismatch in error_recursion_step");
  }
  const VectorXd replicated = process_noise.replicate(sys.node_count, 1);
  return sys.C_cal * (sys.F_cal * e + sys.P_cal * replicated - sys.G_cal * observation_noises);
}

bool pbh_detectable(const MatrixXd& a, const MatrixXd& h, double tol) {
  return pbh_rank_test(a, h, tol);
}

bool pbh_stabilizable(const MatrixXd& a, const MatrixXd& b, double tol) {
  if (b.rows() != a.rows()) throw ConfigError("B must have one row per state");
  // [λI − A, B] has full row rank iff [λ̄I − Aᵀ; Bᵀ] has full column rank.
  return pbh_rank_test(a.transpose(), b.transpose(), tol);
}

ContractionResult contraction_certificate(const StackedErrorSystem& sys, int k_max) {
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  const MatrixXd cf = sys.closed_loop();
  ContractionResult out;
  out.rho = spectral_radius(cf);
  // ‖X^k‖₂ ≥ ρ(X)^k, so no exponent exists once ρ ≥ 1.
  if (!(out.rho < 1.0)) return out;
  MatrixXd power = cf;
  for (int k = 1; k <= k_max; ++k) {
    const double norm = spectral_norm(power);
    if (!std::isfinite(norm)) break;
    if (norm < 1.0) {
      out.exponent = k;
      break;
    }
    power = power * cf;
  }
  return out;
}

ErrorVector bias_propagation(const StackedErrorSystem& sys, const ErrorVector& e1_mean, int n) {
  if (n < 0) throw ConfigError("step count must be nonnegative");
  if (e1_mean.size() != sys.C_cal.rows()) throw ConfigError("initial mean has the wrong dimension");
  const MatrixXd cf = sys.closed_loop();
  ErrorVector e = e1_mean;
  for (int k = 0; k < n; ++k) e = cf * e;
  return e;
}

std::optional<int> bias_decay_horizon(const StackedErrorSystem& sys, const ErrorVector& e1_mean,
                                      double ratio, int n_max) {
  const MatrixXd cf = sys.closed_loop();
  const double threshold = ratio * e1_mean.norm();
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(n_max) + 1);
  ErrorVector e = e1_mean;
  for (int k = 0; k <= n_max; ++k) {
    norms.push_back(e.norm());
    e = cf * e;
  }
  std::optional<int> horizon;
  for (int k = n_max; k >= 0; --k) {
    const bool below = norms[k] < threshold;
    const bool monotone = k == n_max || norms[k + 1] <= norms[k];
    if (!(below && monotone)) break;
    horizon = k;
  }
  return horizon;
}

double centralized_closed_loop_radius(const MatrixXd& m, const StateSpaceModel& model,
                                      std::span<const NodeObservationModel> observers) {
  const Eigen::Index n = model.state_dim();
  MatrixXd info = MatrixXd::Zero(n, n);
  for (const auto& o : observers) {
    Eigen::LLT<MatrixXd> llt(o.R());
    if (llt.info() != Eigen::Success) throw ConfigError("weighting matrix R is singular");
    info += o.H().transpose() * llt.solve(o.H());
  }
  return spectral_radius((MatrixXd::Identity(n, n) - m * info) * model.A());
}

EigenRange eigen_range(std::span<const MatrixXd> matrices) {
  EigenRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& m : matrices) {
    if (!is_symmetric(m, 1e-8)) throw ConfigError("eigenvalue range requires symmetric matrices");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    out.min = std::min(out.min, es.eigenvalues()(0));
    out.max = std::max(out.max, std::min(kEigenvalueCap, es.eigenvalues()(m.rows() - 1)));
  }
  return out;
}

EigenRange eigen_range_from_information(std::span<const MatrixXd> information) {
  EigenRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto reciprocal = [](double mu) { return mu <= 1.0 / kEigenvalueCap ? kEigenvalueCap : 1.0 / mu; };
  for (const auto& j : information) {
    if (!is_symmetric(j, 1e-8)) throw ConfigError("eigenvalue range requires symmetric matrices");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(j, Eigen::EigenvaluesOnly);
    out.min = std::min(out.min, reciprocal(es.eigenvalues()(j.rows() - 1)));
    out.max = std::max(out.max, reciprocal(es.eigenvalues()(0)));
  }
  return out;
}

std::vector<EigenRange> eigen_range_report(const std::vector<std::vector<MatrixXd>>& per_step) {
  std::vector<EigenRange> out;
  out.reserve(per_step.size());
  for (const auto& step : per_step) out.push_back(eigen_range(step));
  return out;
}

bool StabilityCertificate::conclusive() const {
  return riccati_converged && ((rho_cf < 1.0) == contraction_exponent.has_value());
}

std::string format_certificate(const StabilityCertificate& cert) {
  std::ostringstream out;
  out << std::boolalpha << std::setprecision(17);
  out << "detectable: " << cert.detectable << '\n';
  out << "stabilizable: " << cert.stabilizable << '\n';
  out << "rho_cf: " << cert.rho_cf << '\n';
  out << "contraction_exponent: ";
  if (cert.contraction_exponent) {
    out << *cert.contraction_exponent << '\n';
  } else {
    out << "none\n";
  }
  out << "centralized_rho: " << cert.centralized_rho << '\n';
  out << "primitivity_exponent: " << cert.primitivity_exponent << '\n';
  out << "riccati_iterations: " << cert.riccati_iterations << '\n';
  out << "riccati_converged: " << cert.riccati_converged << '\n';
  out << "stable: " << (cert.rho_cf < 1.0) << '\n';
  out << "conclusive: " << cert.conclusive() << '\n';
  return out.str();
}

}  // namespace disfilter
