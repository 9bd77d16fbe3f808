#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "disfilter/experiment.hpp"
#include "disfilter/filters.hpp"

namespace disfilter::testing {

inline MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale);
}

/// Random SPD matrix with eigenvalues bounded below by `floor`.
inline MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double floor = 0.1) {
  const MatrixXd b = random_matrix(n, n, rng);
  return symmetrize(b * b.transpose() / static_cast<double>(n) + floor * MatrixXd::Identity(n, n));
}

/// The default 20-node tracking scenario.
inline DistributedModel tracking_scenario(std::uint64_t topology_seed = 1) {
  ExperimentConfig config;
  config.topology_seed = topology_seed;
  return build_scenario(config);
}

/// Random linear system with random observers on a random connected network.
inline DistributedModel random_system(std::mt19937_64& rng, int nodes, Eigen::Index dim) {
  const MatrixXd a = random_matrix(dim, dim, rng, 0.6);
  const MatrixXd f = random_matrix(dim, dim, rng, 0.3);
  StateSpaceModel model(a, symmetrize(f * f.transpose()));
  std::vector<NodeObservationModel> observers;
  std::uniform_int_distribution<int> obs_dim(1, 2);
  for (int l = 0; l < nodes; ++l) {
    const int p = obs_dim(rng);
    const MatrixXd r = random_spd(p, rng, 0.2);
    observers.emplace_back(random_matrix(p, dim, rng), r, r);
  }
  const int max_edges = nodes * (nodes - 1) / 2;
  std::uniform_int_distribution<int> edges(nodes - 1, max_edges);
  Network net = random_connected_network(nodes, edges(rng), rng());
  CombinationMatrix c = uniform_weights(net);
  return DistributedModel(std::move(model), std::move(observers), std::move(net), std::move(c));
}

}  // namespace disfilter::testing
