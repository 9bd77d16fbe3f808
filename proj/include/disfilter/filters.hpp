#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "disfilter/linalg.hpp"
#include "disfilter/model.hpp"
#include "disfilter/network.hpp"

namespace disfilter {

/// H_lᵀ·R_l⁻¹. Throws ConfigError naming `node` if R_l is singular.
MatrixXd weighted_observation_transpose(const NodeObservationModel& obs, int node = 0);

/// H_lᵀ·R_l⁻¹·H_l.
MatrixXd observation_information(const NodeObservationModel& obs, int node = 0);

/// H_col = col{H_l}.
MatrixXd stack_observation_matrices(std::span<const NodeObservationModel> observers);

/// (A·M·Aᵀ + Σ_v)⁻¹. Throws NumericalError with the smallest eigenvalue if
/// the predicted covariance is not positive definite.
MatrixXd predicted_information(const MatrixXd& m, const StateSpaceModel& model);

/// Everything a networked filter needs: dynamics, per-node observers, the
/// graph and its combination weights. Caches H_lᵀR_l⁻¹ and H_lᵀR_l⁻¹H_l.
class DistributedModel {
 public:
  /// Throws ConfigError on node-count or dimension mismatches and on
  /// singular R_l (naming the node).
  DistributedModel(StateSpaceModel model, std::vector<NodeObservationModel> observers,
                   Network network, CombinationMatrix weights);

  const StateSpaceModel& model() const { return model_; }
  std::span<const NodeObservationModel> observers() const { return observers_; }
  const NodeObservationModel& observer(int l) const { return observers_.at(l); }
  const Network& network() const { return network_; }
  const CombinationMatrix& weights() const { return weights_; }
  int node_count() const { return network_.node_count(); }
  Eigen::Index state_dim() const { return model_.state_dim(); }

  const MatrixXd& weighted_transpose(int l) const { return weighted_transpose_.at(l); }
  const MatrixXd& information(int l) const { return information_.at(l); }

  MatrixXd stacked_observation() const;
  /// Σ_l H_lᵀR_l⁻¹H_l.
  MatrixXd total_information() const;

 private:
  StateSpaceModel model_;
  std::vector<NodeObservationModel> observers_;
  Network network_;
  CombinationMatrix weights_;
  std::vector<MatrixXd> weighted_transpose_;
  std::vector<MatrixXd> information_;
};

// ---------------------------------------------------------------------------
// Centralized filter

struct CentralizedFilterState {
  VectorXd x_hat;
  MatrixXd M;
  MatrixXd G;
};

/// M⁺ = ((A·M·Aᵀ + Σ_v)⁻¹ + Σ_l H_lᵀR_l⁻¹H_l)⁻¹, symmetrized.
MatrixXd centralized_riccati_step(const MatrixXd& m, const StateSpaceModel& model,
                                  std::span<const NodeObservationModel> observers);

/// G = M·H_colᵀ·R⁻¹ = [M H_1ᵀR_1⁻¹, …, M H_NᵀR_N⁻¹].
MatrixXd centralized_gain(const MatrixXd& m, std::span<const NodeObservationModel> observers);

/// x̂⁺ = (I − G·H_col)·A·x̂ + G·y_col, where y_col observes the state being
/// estimated. M and G are carried over unchanged.
CentralizedFilterState centralized_step(const CentralizedFilterState& state, const VectorXd& y_col,
                                        const StateSpaceModel& model,
                                        std::span<const NodeObservationModel> observers);

// ---------------------------------------------------------------------------
// Distributed filter

/// Per-node filter state. `information` is M⁻¹ and is kept by every
/// schedule; the classical schedule treats it as primary because M itself
/// grows without bound along locally unobservable modes.
struct NodeFilterState {
  VectorXd x_hat;
  VectorXd phi;
  MatrixXd M;
  MatrixXd information;
  MatrixXd S;
  MatrixXd G;
};

/// All nodes start from x̂ = `x0`, M = `m0`, G from m0.
std::vector<NodeFilterState> initial_node_states(const DistributedModel& dm, const MatrixXd& m0,
                                                 const VectorXd& x0);

/// G_l = M_l·H_lᵀ·R_l⁻¹.
MatrixXd distributed_gain(const MatrixXd& m, const NodeObservationModel& obs, int node = 0);

/// Local-only information update used by the classical baseline:
/// J⁺ = (A·J⁻¹·Aᵀ + Σ_v)⁻¹ + H_lᵀR_l⁻¹H_l, with J = M⁻¹. When A is
/// invertible the prediction is done in information form through the
/// Woodbury identity, so J may approach singularity without overflow.
MatrixXd classical_local_riccati_step(const MatrixXd& information, const StateSpaceModel& model,
                                      const NodeObservationModel& obs, int node = 0);

/// Predicted-covariance form of the distributed recursion: P_l is the
/// predicted covariance, Z_l its neighborhood-combined counterpart.
struct PZState {
  MatrixXd P;
  MatrixXd Z;
};

/// H̄_l: rows √c_{l,i}·H_i stacked over i ∈ N_l.
MatrixXd neighborhood_observation(const DistributedModel& dm, int l);
/// R̄_l = diag{R_i : i ∈ N_l}.
MatrixXd neighborhood_weighting(const DistributedModel& dm, int l);
/// H̄_lᵀ·R̄_l⁻¹·H̄_l, formed literally from the stacked matrices.
MatrixXd neighborhood_information(const DistributedModel& dm, int l);

/// PZ pairs matching a set of Riccati matrices:
/// P_l = A·M_l·Aᵀ + Σ_v, Z_l⁻¹ = Σ_i c_{l,i} P_i⁻¹.
std::vector<PZState> pz_from_riccati(std::span<const MatrixXd> m, const DistributedModel& dm);

/// M_l = (Z_l⁻¹ + H̄_lᵀR̄_l⁻¹H̄_l)⁻¹.
MatrixXd riccati_from_pz(const PZState& pz, const DistributedModel& dm, int l);

// Network-wide steps. Each runs in two phases separated by a barrier (local
// computation, then neighborhood combination) and is parallelized across
// nodes with OpenMP. Results are bitwise identical to the serial versions
// in `reference`.

/// S_l⁺ = (A·M_l·Aᵀ + Σ_v)⁻¹ + H_lᵀR_l⁻¹H_l; M_l⁺⁻¹ = Σ_{i∈N_l} c_{l,i}·S_i⁺.
void distributed_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm);

/// classical_local_riccati_step on every node; M is refreshed from the
/// information matrix.
void classical_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm);

/// G_l from the current M_l (from the information matrix, by solve, when
/// `from_information` is set).
void refresh_gains(std::vector<NodeFilterState>& nodes, const DistributedModel& dm,
                   bool from_information = false);

/// Adapt: φ_l = (I − G_l·H_l)·A·x̂_l + G_l·y_l. Combine: x̂_l = Σ_{i∈N_l} c_{l,i}·φ_i.
/// `observations[l]` observes the state being estimated.
void diffusion_step(std::vector<NodeFilterState>& nodes, std::span<const VectorXd> observations,
                    const DistributedModel& dm);

/// P_l⁺ = A·(Z_l⁻¹ + H̄_lᵀR̄_l⁻¹H̄_l)⁻¹·Aᵀ + Σ_v; Z_l⁺⁻¹ = Σ_{i∈N_l} c_{l,i}·P_i⁺⁻¹.
void pz_form_step(std::vector<PZState>& pz, const DistributedModel& dm);

namespace reference {

void distributed_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm);
void classical_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm);
void refresh_gains(std::vector<NodeFilterState>& nodes, const DistributedModel& dm,
                   bool from_information = false);
void diffusion_step(std::vector<NodeFilterState>& nodes, std::span<const VectorXd> observations,
                    const DistributedModel& dm);
void pz_form_step(std::vector<PZState>& pz, const DistributedModel& dm);

}  // namespace reference

// ---------------------------------------------------------------------------
// Schedules

enum class Schedule { central, modern, classical };

std::string_view to_string(Schedule schedule);
/// Throws ConfigError on unknown names.
Schedule parse_schedule(std::string_view name);

struct FilterOptions {
  /// M_1 = M_{l,1} = scale·I.
  double initial_riccati_scale = 1.0;
  /// Stop the Riccati recursion after this many steps and keep the gains.
  std::optional<std::size_t> freeze_gains_after;
  bool parallel = true;
};

/// Runs one gain schedule over a DistributedModel. Each step advances the
/// Riccati recursion, refreshes the gains from the new Riccati matrices and
/// then fuses the observations of the new state. The central schedule runs
/// one centralized filter and reports its estimate at every node.
class NetworkFilter {
 public:
  NetworkFilter(const DistributedModel& dm, Schedule schedule, FilterOptions options,
                const VectorXd& initial_estimate);

  /// Throws NumericalError (with the step number) on loss of definiteness.
  void step(std::span<const VectorXd> observations);

  Schedule schedule() const { return schedule_; }
  std::size_t steps_taken() const { return steps_; }
  bool gains_frozen() const;
  /// max_l ‖M_l⁺ − M_l‖_F over the last Riccati update.
  double last_riccati_change() const { return last_change_; }

  std::vector<VectorXd> estimates() const;
  std::vector<MatrixXd> gains() const;
  std::vector<MatrixXd> riccati_matrices() const;
  std::vector<MatrixXd> information_matrices() const;
  const std::vector<NodeFilterState>& nodes() const { return nodes_; }
  const CentralizedFilterState& central() const { return central_; }

 private:
  const DistributedModel* dm_;
  Schedule schedule_;
  FilterOptions options_;
  std::vector<NodeFilterState> nodes_;
  CentralizedFilterState central_;
  std::size_t steps_ = 0;
  double last_change_ = 0.0;
};

struct CentralizedConvergence {
  MatrixXd M;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Iterates centralized_riccati_step until ‖ΔM‖_F < tol.
CentralizedConvergence converge_centralized_riccati(const MatrixXd& m0, const StateSpaceModel& model,
                                                    std::span<const NodeObservationModel> observers,
                                                    double tol, std::size_t max_iterations);

struct DistributedConvergence {
  std::vector<NodeFilterState> nodes;  // gains refreshed from the final M
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

/// Iterates the modern (or classical) Riccati schedule until
/// max_l ‖ΔM_l‖_F < tol. The classical schedule does not converge when some
/// node has locally undetectable modes.
DistributedConvergence converge_distributed_riccati(const DistributedModel& dm, Schedule schedule,
                                                    const MatrixXd& m0, double tol,
                                                    std::size_t max_iterations);

}  // namespace disfilter
