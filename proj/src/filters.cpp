#include "disfilter/filters.hpp"

#include <algorithm>
#include <exception>
#include <sstream>
#include <string>

#include <Eigen/LU>

#include "disfilter/errors.hpp"

namespace disfilter {
namespace {

std::string node_prefix(int node) { return "node " + std::to_string(node) + ": "; }

// Runs fn(l) for every node. Exceptions are captured per node and the one
// from the lowest node index is rethrown, so failures are reported the
// same way regardless of scheduling.
struct Serial {
  template <class Fn>
  static void for_each(int n, Fn&& fn) {
    for (int l = 0; l < n; ++l) fn(l);
  }
};

struct Parallel {
  template <class Fn>
  static void for_each(int n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (int l = 0; l < n; ++l) {
      try {
        fn(l);
      } catch (...) {
        errors[static_cast<std::size_t>(l)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
};

template <class Fn>
auto naming_node(int node, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(node_prefix(node) + e.what());
  }
}

// Information-form prediction (A·J⁻¹·Aᵀ + Σ_v)⁻¹. With A invertible the
// Woodbury identity gives Y − Y·F·(I + Fᵀ·Y·F)⁻¹·Fᵀ·Y where Y = A⁻ᵀ·J·A⁻¹
// and F·Fᵀ = Σ_v; only I + FᵀYF is factorized and it is bounded below by I.
class InformationPredictor {
 public:
  explicit InformationPredictor(const StateSpaceModel& model)
      : model_(&model), noise_factor_(psd_sqrt(model.sigma_v())) {
    Eigen::FullPivLU<MatrixXd> lu(model.A());
    if (lu.isInvertible()) a_inv_ = lu.inverse();
  }

  MatrixXd operator()(const MatrixXd& information) const {
    if (a_inv_.size() == 0) {
      return predicted_information(spd_inverse(information, "information matrix"), *model_);
    }
    const MatrixXd y = symmetrize(a_inv_.transpose() * information * a_inv_);
    const MatrixXd yf = y * noise_factor_;
    MatrixXd inner = noise_factor_.transpose() * yf;
    inner.diagonal().array() += 1.0;
    return symmetrize(y - yf * spd_solve(inner, yf.transpose(), "information prediction"));
  }

 private:
  const StateSpaceModel* model_;
  MatrixXd noise_factor_;
  MatrixXd a_inv_;
};

MatrixXd classical_update(const InformationPredictor& predict, const MatrixXd& information,
                          const MatrixXd& local_information) {
  MatrixXd next = symmetrize(predict(information) + local_information);
  const double lo = min_eigenvalue(next);
  const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
  if (lo < -1e-10 * scale) {
    std::ostringstream msg;
    msg << "information matrix became indefinite (smallest eigenvalue " << lo << ")";
    throw NumericalError(msg.str());
  }
  return next;
}

double max_change(const std::vector<MatrixXd>& before, const std::vector<NodeFilterState>& after) {
  double change = 0.0;
  for (std::size_t l = 0; l < before.size(); ++l)
    change = std::max(change, (after[l].M - before[l]).norm());
  return change;
}

// --- two-phase network kernels --------------------------------------------

template <class Exec>
void distributed_riccati_impl(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  const int n = dm.node_count();
  Exec::for_each(n, [&](int l) {
    naming_node(l, [&] {
      nodes[l].S = symmetrize(predicted_information(nodes[l].M, dm.model()) + dm.information(l));
    });
  });
  Exec::for_each(n, [&](int l) {
    naming_node(l, [&] {
      MatrixXd info = MatrixXd::Zero(dm.state_dim(), dm.state_dim());
      for (int i : dm.network().neighborhood(l)) info += dm.weights()(l, i) * nodes[i].S;
      nodes[l].information = symmetrize(info);
      nodes[l].M = symmetrize(spd_inverse(nodes[l].information, "combined information"));
    });
  });
}

template <class Exec>
void classical_riccati_impl(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  const InformationPredictor predict(dm.model());
  Exec::for_each(dm.node_count(), [&](int l) {
    naming_node(l, [&] {
      nodes[l].information = classical_update(predict, nodes[l].information, dm.information(l));
      nodes[l].S = nodes[l].information;
      nodes[l].M = symmetrize(spd_inverse(nodes[l].information, "local information"));
    });
  });
}

template <class Exec>
void refresh_gains_impl(std::vector<NodeFilterState>& nodes, const DistributedModel& dm,
                        bool from_information) {
  Exec::for_each(dm.node_count(), [&](int l) {
    naming_node(l, [&] {
      nodes[l].G = from_information
                       ? spd_solve(nodes[l].information, dm.weighted_transpose(l), "local information")
                       : MatrixXd(nodes[l].M * dm.weighted_transpose(l));
    });
  });
}

template <class Exec>
void diffusion_impl(std::vector<NodeFilterState>& nodes, std::span<const VectorXd> observations,
                    const DistributedModel& dm) {
  const int n = dm.node_count();
  if (static_cast<int>(nodes.size()) != n || static_cast<int>(observations.size()) != n)
    throw ConfigError("diffusion_step needs one state and one observation per node");
  for (int l = 0; l < n; ++l) {
    if (observations[l].size() != dm.observer(l).obs_dim() ||
        nodes[l].x_hat.size() != dm.state_dim() || nodes[l].G.rows() != dm.state_dim() ||
        nodes[l].G.cols() != dm.observer(l).obs_dim()) {
      throw ConfigError(node_prefix(l) + "dimension mismatch in diffusion_step");
    }
  }
  const MatrixXd identity = MatrixXd::Identity(dm.state_dim(), dm.state_dim());
  Exec::for_each(n, [&](int l) {
    const auto& node = nodes[l];
    nodes[l].phi = (identity - node.G * dm.observer(l).H()) * dm.model().A() * node.x_hat +
                   node.G * observations[l];
  });
  Exec::for_each(n, [&](int l) {
    VectorXd x = VectorXd::Zero(dm.state_dim());
    for (int i : dm.network().neighborhood(l)) x += dm.weights()(l, i) * nodes[i].phi;
    nodes[l].x_hat = std::move(x);
  });
}

template <class Exec>
void pz_impl(std::vector<PZState>& pz, const DistributedModel& dm) {
  const int n = dm.node_count();
  if (static_cast<int>(pz.size()) != n) throw ConfigError("pz_form_step needs one state per node");
  std::vector<MatrixXd> p_information(pz.size());
  const auto& a = dm.model().A();
  Exec::for_each(n, [&](int l) {
    naming_node(l, [&] {
      const MatrixXd posterior_information =
          spd_inverse(pz[l].Z, "Z") + neighborhood_information(dm, l);
      const MatrixXd posterior = spd_inverse(symmetrize(posterior_information), "posterior");
      pz[l].P = symmetrize(a * posterior * a.transpose() + dm.model().sigma_v());
      p_information[l] = symmetrize(spd_inverse(pz[l].P, "P"));
    });
  });
  Exec::for_each(n, [&](int l) {
    naming_node(l, [&] {
      MatrixXd z_information = MatrixXd::Zero(dm.state_dim(), dm.state_dim());
      for (int i : dm.network().neighborhood(l)) z_information += dm.weights()(l, i) * p_information[i];
      pz[l].Z = symmetrize(spd_inverse(symmetrize(z_information), "combined P information"));
    });
  });
}

}  // namespace

// ---------------------------------------------------------------------------

MatrixXd weighted_observation_transpose(const NodeObservationModel& obs, int node) {
  Eigen::LLT<MatrixXd> llt(obs.R());
  if (obs.R().size() > 0 && (llt.info() != Eigen::Success || min_eigenvalue(obs.R()) <= 0.0))
    throw ConfigError(node_prefix(node) + "weighting matrix R is singular");
  return llt.solve(obs.H()).transpose();
}

MatrixXd observation_information(const NodeObservationModel& obs, int node) {
  return symmetrize(weighted_observation_transpose(obs, node) * obs.H());
}

MatrixXd stack_observation_matrices(std::span<const NodeObservationModel> observers) {
  if (observers.empty()) throw ConfigError("no observers");
  Eigen::Index rows = 0;
  for (const auto& o : observers) rows += o.obs_dim();
  MatrixXd h(rows, observers.front().state_dim());
  Eigen::Index r = 0;
  for (const auto& o : observers) {
    h.middleRows(r, o.obs_dim()) = o.H();
    r += o.obs_dim();
  }
  return h;
}

MatrixXd predicted_information(const MatrixXd& m, const StateSpaceModel& model) {
  const MatrixXd p = symmetrize(model.A() * m * model.A().transpose() + model.sigma_v());
  return symmetrize(spd_inverse(p, "predicted covariance A M A' + sigma_v"));
}

DistributedModel::DistributedModel(StateSpaceModel model, std::vector<NodeObservationModel> observers,
                                   Network network, CombinationMatrix weights)
    : model_(std::move(model)),
      observers_(std::move(observers)),
      network_(std::move(network)),
      weights_(std::move(weights)) {
  if (static_cast<int>(observers_.size()) != network_.node_count())
    throw ConfigError("one observation model is required per network node");
  if (weights_.size() != network_.node_count())
    throw ConfigError("combination matrix does not match the network");
  check_dimensions(model_, observers_);
  for (int l = 0; l < node_count(); ++l) {
    weighted_transpose_.push_back(weighted_observation_transpose(observers_[l], l));
    information_.push_back(symmetrize(weighted_transpose_.back() * observers_[l].H()));
  }
}

MatrixXd DistributedModel::stacked_observation() const { return stack_observation_matrices(observers_); }

MatrixXd DistributedModel::total_information() const {
  MatrixXd total = MatrixXd::Zero(state_dim(), state_dim());
  for (const auto& info : information_) total += info;
  return total;
}

MatrixXd centralized_riccati_step(const MatrixXd& m, const StateSpaceModel& model,
                                  std::span<const NodeObservationModel> observers) {
  check_dimensions(model, observers);
  MatrixXd info = predicted_information(m, model);
  for (std::size_t l = 0; l < observers.size(); ++l)
    info += observation_information(observers[l], static_cast<int>(l));
  return symmetrize(spd_inverse(symmetrize(info), "centralized information"));
}

MatrixXd centralized_gain(const MatrixXd& m, std::span<const NodeObservationModel> observers) {
  Eigen::Index cols = 0;
  for (const auto& o : observers) cols += o.obs_dim();
  MatrixXd g(m.rows(), cols);
  Eigen::Index c = 0;
  for (std::size_t l = 0; l < observers.size(); ++l) {
    const auto& o = observers[l];
    g.middleCols(c, o.obs_dim()) = m * weighted_observation_transpose(o, static_cast<int>(l));
    c += o.obs_dim();
  }
  return g;
}

CentralizedFilterState centralized_step(const CentralizedFilterState& state, const VectorXd& y_col,
                                        const StateSpaceModel& model,
                                        std::span<const NodeObservationModel> observers) {
  const MatrixXd h = stack_observation_matrices(observers);
  const Eigen::Index n = model.state_dim();
  if (h.cols() != n || state.x_hat.size() != n || y_col.size() != h.rows() ||
      state.G.rows() != n || state.G.cols() != h.rows()) {
    throw ConfigError("dimension mismatch in centralized_step");
  }
  CentralizedFilterState next = state;
  next.x_hat = (MatrixXd::Identity(n, n) - state.G * h) * model.A() * state.x_hat + state.G * y_col;
  return next;
}

std::vector<NodeFilterState> initial_node_states(const DistributedModel& dm, const MatrixXd& m0,
                                                 const VectorXd& x0) {
  if (m0.rows() != dm.state_dim() || m0.cols() != dm.state_dim() || x0.size() != dm.state_dim())
    throw ConfigError("initial state or Riccati matrix has the wrong dimension");
  const MatrixXd information = symmetrize(spd_inverse(m0, "initial Riccati matrix"));
  std::vector<NodeFilterState> nodes(static_cast<std::size_t>(dm.node_count()));
  for (int l = 0; l < dm.node_count(); ++l) {
    auto& node = nodes[l];
    node.x_hat = x0;
    node.phi = x0;
    node.M = m0;
    node.information = information;
    node.S = information;
    node.G = m0 * dm.weighted_transpose(l);
  }
  return nodes;
}

MatrixXd distributed_gain(const MatrixXd& m, const NodeObservationModel& obs, int node) {
  if (m.rows() != obs.state_dim() || m.cols() != obs.state_dim())
    throw ConfigError(node_prefix(node) + "Riccati matrix does not match H");
  return m * weighted_observation_transpose(obs, node);
}

MatrixXd classical_local_riccati_step(const MatrixXd& information, const StateSpaceModel& model,
                                      const NodeObservationModel& obs, int node) {
  if (obs.state_dim() != model.state_dim() || information.rows() != model.state_dim())
    throw ConfigError(node_prefix(node) + "dimension mismatch");
  const InformationPredictor predict(model);
  return naming_node(node, [&] {
    return classical_update(predict, information, observation_information(obs, node));
  });
}

MatrixXd neighborhood_observation(const DistributedModel& dm, int l) {
  const auto& hood = dm.network().neighborhood(l);
  Eigen::Index rows = 0;
  for (int i : hood) rows += dm.observer(i).obs_dim();
  MatrixXd h(rows, dm.state_dim());
  Eigen::Index r = 0;
  for (int i : hood) {
    const auto& o = dm.observer(i);
    h.middleRows(r, o.obs_dim()) = std::sqrt(dm.weights()(l, i)) * o.H();
    r += o.obs_dim();
  }
  return h;
}

MatrixXd neighborhood_weighting(const DistributedModel& dm, int l) {
  const auto& hood = dm.network().neighborhood(l);
  Eigen::Index rows = 0;
  for (int i : hood) rows += dm.observer(i).obs_dim();
  MatrixXd r = MatrixXd::Zero(rows, rows);
  Eigen::Index k = 0;
  for (int i : hood) {
    const auto& o = dm.observer(i);
    r.block(k, k, o.obs_dim(), o.obs_dim()) = o.R();
    k += o.obs_dim();
  }
  return r;
}

MatrixXd neighborhood_information(const DistributedModel& dm, int l) {
  const MatrixXd h = neighborhood_observation(dm, l);
  const MatrixXd r = neighborhood_weighting(dm, l);
  Eigen::LLT<MatrixXd> llt(r);
  if (llt.info() != Eigen::Success)
    throw ConfigError(node_prefix(l) + "neighborhood weighting matrix is singular");
  return symmetrize(h.transpose() * llt.solve(h));
}

std::vector<PZState> pz_from_riccati(std::span<const MatrixXd> m, const DistributedModel& dm) {
  if (static_cast<int>(m.size()) != dm.node_count())
    throw ConfigError("one Riccati matrix is required per node");
  const auto& a = dm.model().A();
  std::vector<PZState> pz(m.size());
  std::vector<MatrixXd> p_information(m.size());
  for (std::size_t l = 0; l < m.size(); ++l) {
    pz[l].P = symmetrize(a * m[l] * a.transpose() + dm.model().sigma_v());
    p_information[l] = symmetrize(spd_inverse(pz[l].P, "P"));
  }
  for (int l = 0; l < dm.node_count(); ++l) {
    MatrixXd z_information = MatrixXd::Zero(dm.state_dim(), dm.state_dim());
    for (int i : dm.network().neighborhood(l)) z_information += dm.weights()(l, i) * p_information[i];
    pz[l].Z = symmetrize(spd_inverse(symmetrize(z_information), "combined P information"));
  }
  return pz;
}

MatrixXd riccati_from_pz(const PZState& pz, const DistributedModel& dm, int l) {
  const MatrixXd information = spd_inverse(pz.Z, "Z") + neighborhood_information(dm, l);
  return symmetrize(spd_inverse(symmetrize(information), "posterior"));
}

void distributed_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  distributed_riccati_impl<Parallel>(nodes, dm);
}
void classical_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  classical_riccati_impl<Parallel>(nodes, dm);
}
void refresh_gains(std::vector<NodeFilterState>& nodes, const DistributedModel& dm,
                   bool from_information) {
  refresh_gains_impl<Parallel>(nodes, dm, from_information);
}
void diffusion_step(std::vector<NodeFilterState>& nodes, std::span<const VectorXd> observations,
                    const DistributedModel& dm) {
  diffusion_impl<Parallel>(nodes, observations, dm);
}
void pz_form_step(std::vector<PZState>& pz, const DistributedModel& dm) { pz_impl<Parallel>(pz, dm); }

namespace reference {

void distributed_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  distributed_riccati_impl<Serial>(nodes, dm);
}
void classical_riccati_step(std::vector<NodeFilterState>& nodes, const DistributedModel& dm) {
  classical_riccati_impl<Serial>(nodes, dm);
}
void refresh_gains(std::vector<NodeFilterState>& nodes, const DistributedModel& dm,
                   bool from_information) {
  refresh_gains_impl<Serial>(nodes, dm, from_information);
}
void diffusion_step(std::vector<NodeFilterState>& nodes, std::span<const VectorXd> observations,
                    const DistributedModel& dm) {
  diffusion_impl<Serial>(nodes, observations, dm);
}
void pz_form_step(std::vector<PZState>& pz, const DistributedModel& dm) { pz_impl<Serial>(pz, dm); }

}  // namespace reference

// ---------------------------------------------------------------------------

std::string_view to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::central: return "central";
    case Schedule::modern: return "modern";
    case Schedule::classical: return "classical";
  }
  return "unknown";
}

Schedule parse_schedule(std::string_view name) {
  if (name == "central") return Schedule::central;
  if (name == "modern") return Schedule::modern;
  if (name == "classical") return Schedule::classical;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (central|modern|classical)");
}

NetworkFilter::NetworkFilter(const DistributedModel& dm, Schedule schedule, FilterOptions options,
                             const VectorXd& initial_estimate)
    : dm_(&dm), schedule_(schedule), options_(options) {
  if (!(options_.initial_riccati_scale > 0.0)) throw ConfigError("initial Riccati scale must be positive");
  const MatrixXd m0 = options_.initial_riccati_scale * MatrixXd::Identity(dm.state_dim(), dm.state_dim());
  if (schedule_ == Schedule::central) {
    if (initial_estimate.size() != dm.state_dim()) throw ConfigError("initial estimate has the wrong dimension");
    central_ = {initial_estimate, m0, centralized_gain(m0, dm.observers())};
  } else {
    nodes_ = initial_node_states(dm, m0, initial_estimate);
  }
}

bool NetworkFilter::gains_frozen() const {
  return options_.freeze_gains_after && steps_ >= *options_.freeze_gains_after;
}

void NetworkFilter::step(std::span<const VectorXd> observations) {
  const DistributedModel& dm = *dm_;
  try {
    if (!gains_frozen()) {
      if (schedule_ == Schedule::central) {
        const MatrixXd next = centralized_riccati_step(central_.M, dm.model(), dm.observers());
        last_change_ = (next - central_.M).norm();
        central_.M = next;
        central_.G = centralized_gain(central_.M, dm.observers());
      } else {
        std::vector<MatrixXd> before;
        before.reserve(nodes_.size());
        for (const auto& node : nodes_) before.push_back(node.M);
        const bool classical = schedule_ == Schedule::classical;
        if (options_.parallel) {
          classical ? classical_riccati_step(nodes_, dm) : distributed_riccati_step(nodes_, dm);
          refresh_gains(nodes_, dm, classical);
        } else {
          classical ? reference::classical_riccati_step(nodes_, dm)
                    : reference::distributed_riccati_step(nodes_, dm);
          reference::refresh_gains(nodes_, dm, classical);
        }
        last_change_ = max_change(before, nodes_);
      }
    }

    if (schedule_ == Schedule::central) {
      if (static_cast<int>(observations.size()) != dm.node_count())
        throw ConfigError("one observation per node is required");
      Eigen::Index rows = 0;
      for (const auto& y : observations) rows += y.size();
      VectorXd y_col(rows);
      Eigen::Index r = 0;
      for (const auto& y : observations) {
        y_col.segment(r, y.size()) = y;
        r += y.size();
      }
      central_ = centralized_step(central_, y_col, dm.model(), dm.observers());
    } else if (options_.parallel) {
      diffusion_step(nodes_, observations, dm);
    } else {
      reference::diffusion_step(nodes_, observations, dm);
    }
  } catch (const NumericalError& e) {
    throw NumericalError("step " + std::to_string(steps_ + 1) + ": " + e.what());
  }
  ++steps_;
}

std::vector<VectorXd> NetworkFilter::estimates() const {
  if (schedule_ == Schedule::central)
    return std::vector<VectorXd>(static_cast<std::size_t>(dm_->node_count()), central_.x_hat);
  std::vector<VectorXd> out;
  out.reserve(nodes_.size());
  for (const auto& node : nodes_) out.push_back(node.x_hat);
  return out;
}

std::vector<MatrixXd> NetworkFilter::gains() const {
  std::vector<MatrixXd> out;
  if (schedule_ == Schedule::central) {
    Eigen::Index c = 0;
    for (const auto& o : dm_->observers()) {
      out.push_back(central_.G.middleCols(c, o.obs_dim()));
      c += o.obs_dim();
    }
    return out;
  }
  for (const auto& node : nodes_) out.push_back(node.G);
  return out;
}

std::vector<MatrixXd> NetworkFilter::riccati_matrices() const {
  if (schedule_ == Schedule::central)
    return std::vector<MatrixXd>(static_cast<std::size_t>(dm_->node_count()), central_.M);
  std::vector<MatrixXd> out;
  for (const auto& node : nodes_) out.push_back(node.M);
  return out;
}

std::vector<MatrixXd> NetworkFilter::information_matrices() const {
  if (schedule_ == Schedule::central) {
    return std::vector<MatrixXd>(static_cast<std::size_t>(dm_->node_count()),
                                 symmetrize(spd_inverse(central_.M, "central Riccati matrix")));
  }
  std::vector<MatrixXd> out;
  for (const auto& node : nodes_) out.push_back(node.information);
  return out;
}

CentralizedConvergence converge_centralized_riccati(const MatrixXd& m0, const StateSpaceModel& model,
                                                    std::span<const NodeObservationModel> observers,
                                                    double tol, std::size_t max_iterations) {
  CentralizedConvergence out{m0, 0, false};
  while (out.iterations < max_iterations) {
    const MatrixXd next = centralized_riccati_step(out.M, model, observers);
    const double change = (next - out.M).norm();
    out.M = next;
    ++out.iterations;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

DistributedConvergence converge_distributed_riccati(const DistributedModel& dm, Schedule schedule,
                                                    const MatrixXd& m0, double tol,
                                                    std::size_t max_iterations) {
  if (schedule == Schedule::central) throw ConfigError("distributed convergence needs a distributed schedule");
  DistributedConvergence out;
  out.nodes = initial_node_states(dm, m0, VectorXd::Zero(dm.state_dim()));
  const bool classical = schedule == Schedule::classical;
  std::vector<MatrixXd> before(out.nodes.size());
  while (out.iterations < max_iterations) {
    for (std::size_t l = 0; l < before.size(); ++l) before[l] = out.nodes[l].M;
    classical ? classical_riccati_step(out.nodes, dm) : distributed_riccati_step(out.nodes, dm);
    ++out.iterations;
    out.last_change = max_change(before, out.nodes);
    if (out.last_change < tol) {
      out.converged = true;
      break;
    }
  }
  refresh_gains(out.nodes, dm, classical);
  return out;
}

}  // namespace disfilter
