#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace disfilter {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives a child key from a parent key and an index.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

/// Counter-based uniform bit generator. The output sequence is a pure
/// function of (seed, stream, substream, counter), so every (node, step)
/// pair gets its own independent substream and adding nodes never perturbs
/// the draws of existing ones. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
      : key_(derive_key(derive_key(seed, stream), substream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Vector of i.i.d. standard normals.
Eigen::VectorXd standard_normals(Eigen::Index n, CounterRng& rng);

/// Zero-mean Gaussian draw with covariance `cov`, produced by applying the
/// symmetric PSD square root of `cov` to standard normals. Rejects
/// covariances with an eigenvalue below -1e-10.
Eigen::VectorXd sample_gaussian(const Eigen::MatrixXd& cov, CounterRng& rng);

/// Sampler with the PSD factor computed once.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& cov);

  Eigen::VectorXd operator()(CounterRng& rng) const;
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  Eigen::MatrixXd factor_;
};

}  // namespace disfilter
