#include "disfilter/random.hpp"

#include <random>

#include "disfilter/linalg.hpp"

namespace disfilter {

Eigen::VectorXd standard_normals(Eigen::Index n, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

Eigen::VectorXd sample_gaussian(const Eigen::MatrixXd& cov, CounterRng& rng) {
  return GaussianSampler(cov)(rng);
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) : factor_(psd_sqrt(cov)) {}

Eigen::VectorXd GaussianSampler::operator()(CounterRng& rng) const {
  return factor_ * standard_normals(factor_.cols(), rng);
}

}  // namespace disfilter
