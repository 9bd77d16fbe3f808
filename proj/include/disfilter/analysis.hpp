#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disfilter/linalg.hpp"
#include "disfilter/model.hpp"
#include "disfilter/network.hpp"

namespace disfilter {

/// ℰ_n = col{ε_{l,n}}.
using ErrorVector = VectorXd;

/// Network-wide error dynamics ℰ_{n+1} = 𝒞(𝓕ℰ_n + 𝒫(1⊗v_n) − 𝒢𝒲_n).
struct StackedErrorSystem {
  MatrixXd C_cal;  // C ⊗ I
  MatrixXd F_cal;  // diag{(I − G_l H_l) A}
  MatrixXd P_cal;  // diag{I − G_l H_l}
  MatrixXd G_cal;  // diag{G_l}
  int node_count = 0;
  Eigen::Index state_dim = 0;

  MatrixXd closed_loop() const { return C_cal * F_cal; }
};

/// Throws ConfigError on ragged dimensions.
ErrorVector stack_errors(std::span<const VectorXd> per_node);
std::vector<VectorXd> unstack_errors(const ErrorVector& stacked, int node_count);

/// Throws ConfigError on dimension mismatch.
StackedErrorSystem build_stacked_system(const CombinationMatrix& c, std::span<const MatrixXd> gains,
                                        std::span<const NodeObservationModel> observers,
                                        const StateSpaceModel& model);

/// One step of the stacked error recursion. `process_noise` is v_n and
/// `observation_noises` is col{w_l} for the observations fused in the step.
ErrorVector error_recursion_step(const StackedErrorSystem& sys, const ErrorVector& e,
                                 const VectorXd& process_noise,
                                 const VectorXd& observation_noises);

/// Eigenvalues with |λ| ≥ 1 − 1e-9 are treated as not asymptotically stable.
inline constexpr double kUnitCircleMargin = 1e-9;
inline constexpr double kDefaultRankTol = 1e-8;

/// PBH: rank[λI − A; H] = n for every eigenvalue λ of A with |λ| ≥ 1,
/// judged by σ_min > tol·σ_max.
bool pbh_detectable(const MatrixXd& a, const MatrixXd& h, double tol = kDefaultRankTol);

/// PBH: rank[λI − A, B] = n for every eigenvalue λ of A with |λ| ≥ 1.
/// `b` is any factor with B·Bᵀ = Σ_v.
bool pbh_stabilizable(const MatrixXd& a, const MatrixXd& b, double tol = kDefaultRankTol);

struct ContractionResult {
  double rho = 0.0;
  std::optional<int> exponent;  // smallest k ≤ k_max with ‖(𝒞𝓕)^k‖₂ < 1
};

ContractionResult contraction_certificate(const StackedErrorSystem& sys, int k_max);

/// (𝒞𝓕)^n·E[ℰ_1] by repeated multiplication.
ErrorVector bias_propagation(const StackedErrorSystem& sys, const ErrorVector& e1_mean, int n);

/// Smallest n ≤ n_max after which ‖(𝒞𝓕)^n E₁‖ stays below ratio·‖E₁‖ and
/// is non-increasing through n_max; nullopt if none.
std::optional<int> bias_decay_horizon(const StackedErrorSystem& sys, const ErrorVector& e1_mean,
                                      double ratio, int n_max);

/// ρ((I − M·Σ_l H_lᵀR_l⁻¹H_l)·A).
double centralized_closed_loop_radius(const MatrixXd& m, const StateSpaceModel& model,
                                      std::span<const NodeObservationModel> observers);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Eigenvalues above this are reported as the cap.
inline constexpr double kEigenvalueCap = 1e12;

/// Range of eigenvalues over a set of symmetric matrices. Throws
/// ConfigError if any is asymmetric beyond 1e-8.
EigenRange eigen_range(std::span<const MatrixXd> matrices);

/// Same range for the inverses of a set of information matrices, taken as
/// reciprocals of their eigenvalues and capped at kEigenvalueCap.
EigenRange eigen_range_from_information(std::span<const MatrixXd> information);

/// eigen_range per time step.
std::vector<EigenRange> eigen_range_report(const std::vector<std::vector<MatrixXd>>& per_step);

struct StabilityCertificate {
  bool detectable = false;
  bool stabilizable = false;
  double rho_cf = 0.0;
  std::optional<int> contraction_exponent;
  double centralized_rho = 0.0;
  int primitivity_exponent = 0;
  std::size_t riccati_iterations = 0;
  bool riccati_converged = false;

  /// Conclusive when the recursion converged and ρ(𝒞𝓕) < 1 agrees with the
  /// existence of a contraction exponent.
  bool conclusive() const;
};

/// `key: value` lines.
std::string format_certificate(const StabilityCertificate& cert);

}  // namespace disfilter
