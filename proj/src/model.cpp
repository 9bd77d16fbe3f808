#include "disfilter/model.hpp"

#include <sstream>
#include <string>

#include "disfilter/errors.hpp"
#include "disfilter/random.hpp"

namespace disfilter {
namespace {

void require_covariance(const MatrixXd& m, std::string_view name, double sym_tol) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(name) + " must be square");
  if (!is_symmetric(m, sym_tol)) throw ConfigError(std::string(name) + " must be symmetric");
  if (m.size() > 0) {
    const double lo = min_eigenvalue(m);
    if (lo < -1e-10) {
      std::ostringstream msg;
      msg << name << " must be positive semidefinite (smallest eigenvalue " << lo << ")";
      throw ConfigError(msg.str());
    }
  }
}

}  // namespace

StateSpaceModel::StateSpaceModel(MatrixXd a, MatrixXd sigma_v)
    : a_(std::move(a)), sigma_v_(std::move(sigma_v)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) throw ConfigError("A must be square and non-empty");
  if (sigma_v_.rows() != a_.rows() || sigma_v_.cols() != a_.cols())
    throw ConfigError("sigma_v must match the dimension of A");
  require_covariance(sigma_v_, "sigma_v", 1e-12);
}

NodeObservationModel::NodeObservationModel(MatrixXd h, MatrixXd sigma_w, MatrixXd r)
    : h_(std::move(h)), sigma_w_(std::move(sigma_w)), r_(std::move(r)) {
  if (h_.cols() == 0) throw ConfigError("H must have at least one column");
  if (sigma_w_.rows() != h_.rows() || r_.rows() != h_.rows())
    throw ConfigError("sigma_w and R must have one row per observation");
  require_covariance(sigma_w_, "sigma_w", 1e-12);
  require_covariance(r_, "R", 1e-12);
}

void check_dimensions(const StateSpaceModel& model,
                      std::span<const NodeObservationModel> observers) {
  for (std::size_t l = 0; l < observers.size(); ++l) {
    if (observers[l].state_dim() != model.state_dim()) {
      std::ostringstream msg;
      msg << "node " << l << ": H has " << observers[l].state_dim() << " columns, expected "
          << model.state_dim();
      throw ConfigError(msg.str());
    }
  }
}

Trajectory simulate_trajectory(const StateSpaceModel& model,
                               std::span<const NodeObservationModel> observers,
                               std::size_t steps, std::uint64_t seed,
                               const std::optional<VectorXd>& initial_state) {
  if (steps == 0) throw ConfigError("steps must be at least 1");
  check_dimensions(model, observers);
  const Eigen::Index n = model.state_dim();
  if (initial_state && initial_state->size() != n)
    throw ConfigError("initial state has the wrong dimension");

  const GaussianSampler process(model.sigma_v());
  std::vector<GaussianSampler> measurement;
  measurement.reserve(observers.size());
  for (const auto& obs : observers) measurement.emplace_back(obs.sigma_w());

  Trajectory traj;
  traj.states.reserve(steps);
  traj.process_noises.reserve(steps - 1);
  traj.states.push_back(initial_state.value_or(VectorXd::Zero(n)));
  for (std::size_t t = 1; t < steps; ++t) {
    CounterRng rng(seed, 0, t);
    traj.process_noises.push_back(process(rng));
    traj.states.push_back(model.A() * traj.states.back() + traj.process_noises.back());
  }

  traj.observations.resize(observers.size());
  traj.observation_noises.resize(observers.size());
  for (std::size_t l = 0; l < observers.size(); ++l) {
    auto& y = traj.observations[l];
    auto& w = traj.observation_noises[l];
    y.reserve(steps);
    w.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      CounterRng rng(seed, l + 1, t);
      w.push_back(measurement[l](rng));
      y.push_back(observers[l].H() * traj.states[t] + w.back());
    }
  }
  return traj;
}

TrackingModel make_tracking_model(double dt, double q, double r) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(q > 0.0)) throw ConfigError("q must be positive");
  if (!(r > 0.0)) throw ConfigError("r must be positive");

  MatrixXd a = MatrixXd::Identity(4, 4);
  a(0, 2) = dt;
  a(1, 3) = dt;

  MatrixXd b = MatrixXd::Zero(4, 2);
  b(0, 0) = 0.5 * dt * dt;
  b(1, 1) = 0.5 * dt * dt;
  b(2, 0) = dt;
  b(3, 1) = dt;
  const MatrixXd sigma_v = symmetrize(q * b * b.transpose());

  MatrixXd h_x = MatrixXd::Zero(1, 4);
  h_x(0, 0) = 1.0;
  MatrixXd h_y = MatrixXd::Zero(1, 4);
  h_y(0, 1) = 1.0;
  const MatrixXd noise = MatrixXd::Constant(1, 1, r);

  return TrackingModel{StateSpaceModel(a, sigma_v), NodeObservationModel(h_x, noise, noise),
                       NodeObservationModel(h_y, noise, noise)};
}

}  // namespace disfilter
