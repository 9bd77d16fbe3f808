#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "disfilter/linalg.hpp"

namespace disfilter {

/// Linear dynamics x_{n+1} = A·x_n + v_n with v_n ~ N(0, Σ_v).
class StateSpaceModel {
 public:
  /// Throws ConfigError if A is not square, Σ_v does not match A, Σ_v is
  /// asymmetric beyond 1e-12 or has an eigenvalue below -1e-10.
  StateSpaceModel(MatrixXd a, MatrixXd sigma_v);

  const MatrixXd& A() const { return a_; }
  const MatrixXd& sigma_v() const { return sigma_v_; }
  Eigen::Index state_dim() const { return a_.rows(); }

 private:
  MatrixXd a_;
  MatrixXd sigma_v_;
};

/// Per-node observation y_l = H_l·x + w_l with w_l ~ N(0, Σ_{w_l}) and the
/// fusion weighting R_l. Σ_w and R must be symmetric PSD; invertibility of
/// R is only required once gains are formed.
class NodeObservationModel {
 public:
  NodeObservationModel(MatrixXd h, MatrixXd sigma_w, MatrixXd r);

  const MatrixXd& H() const { return h_; }
  const MatrixXd& sigma_w() const { return sigma_w_; }
  const MatrixXd& R() const { return r_; }
  Eigen::Index obs_dim() const { return h_.rows(); }
  Eigen::Index state_dim() const { return h_.cols(); }

 private:
  MatrixXd h_;
  MatrixXd sigma_w_;
  MatrixXd r_;
};

/// A simulated run. Noises are retained so the error recursion can be
/// replayed exactly.
struct Trajectory {
  std::vector<VectorXd> states;                         // x_1..x_T
  std::vector<VectorXd> process_noises;                 // v_1..v_{T-1}
  std::vector<std::vector<VectorXd>> observations;      // [node][step]
  std::vector<std::vector<VectorXd>> observation_noises;  // [node][step]

  std::size_t steps() const { return states.size(); }
};

/// Simulates `steps` states and per-node observations. Process noise uses
/// stream 0 and node l uses stream l+1, with one substream per time step.
/// x_1 defaults to zero.
Trajectory simulate_trajectory(const StateSpaceModel& model,
                               std::span<const NodeObservationModel> observers,
                               std::size_t steps, std::uint64_t seed,
                               const std::optional<VectorXd>& initial_state = std::nullopt);

/// Throws ConfigError naming the first node whose H does not have
/// state_dim columns.
void check_dimensions(const StateSpaceModel& model,
                      std::span<const NodeObservationModel> observers);

/// Planar constant-velocity target, state (x, y, ẋ, ẏ).
struct TrackingModel {
  StateSpaceModel model;
  NodeObservationModel horizontal;  // observes x only
  NodeObservationModel vertical;    // observes y only
};

/// Constant-velocity model driven by acceleration noise of intensity q
/// through B = [dt²/2 I; dt I], folded into Σ_v = B·(q I)·Bᵀ. Observers
/// use Σ_w = R = [r].
TrackingModel make_tracking_model(double dt, double q, double r);

}  // namespace disfilter
