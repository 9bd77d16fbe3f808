#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "disfilter/experiment.hpp"
#include "disfilter/filters.hpp"

namespace disfilter {
namespace {

DistributedModel scenario(int nodes) {
  ExperimentConfig config;
  config.nodes = nodes;
  config.topology_seed = 1;
  return build_scenario(config);
}

std::vector<VectorXd> observations(const DistributedModel& dm) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<VectorXd> y;
  for (int l = 0; l < dm.node_count(); ++l) {
    VectorXd v(dm.observer(l).obs_dim());
    for (auto& x : v) x = normal(rng);
    y.push_back(v);
  }
  return y;
}

template <bool kParallel>
void BM_Riccati(benchmark::State& state) {
  const DistributedModel dm = scenario(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    state.PauseTiming();
    auto nodes = initial_node_states(dm, MatrixXd::Identity(4, 4), VectorXd::Zero(4));
    state.ResumeTiming();
    for (int k = 0; k < 10; ++k) {
      if constexpr (kParallel) {
        distributed_riccati_step(nodes, dm);
      } else {
        reference::distributed_riccati_step(nodes, dm);
      }
    }
    benchmark::DoNotOptimize(nodes);
  }
}

template <bool kParallel>
void BM_Diffusion(benchmark::State& state) {
  const DistributedModel dm = scenario(static_cast<int>(state.range(0)));
  auto nodes = initial_node_states(dm, MatrixXd::Identity(4, 4), VectorXd::Zero(4));
  const auto y = observations(dm);
  for (auto _ : state) {
    if constexpr (kParallel) {
      diffusion_step(nodes, y, dm);
    } else {
      reference::diffusion_step(nodes, y, dm);
    }
    benchmark::DoNotOptimize(nodes);
  }
}

template <bool kParallel>
void BM_PzForm(benchmark::State& state) {
  const DistributedModel dm = scenario(static_cast<int>(state.range(0)));
  std::vector<MatrixXd> m0(static_cast<std::size_t>(dm.node_count()), MatrixXd::Identity(4, 4));
  auto pz = pz_from_riccati(m0, dm);
  for (auto _ : state) {
    if constexpr (kParallel) {
      pz_form_step(pz, dm);
    } else {
      reference::pz_form_step(pz, dm);
    }
    benchmark::DoNotOptimize(pz);
  }
}

BENCHMARK_TEMPLATE(BM_Riccati, false)->Arg(20)->Arg(200)->Arg(1000);
BENCHMARK_TEMPLATE(BM_Riccati, true)->Arg(20)->Arg(200)->Arg(1000);
BENCHMARK_TEMPLATE(BM_Diffusion, false)->Arg(20)->Arg(200)->Arg(1000);
BENCHMARK_TEMPLATE(BM_Diffusion, true)->Arg(20)->Arg(200)->Arg(1000);
BENCHMARK_TEMPLATE(BM_PzForm, false)->Arg(20)->Arg(200)->Arg(1000);
BENCHMARK_TEMPLATE(BM_PzForm, true)->Arg(20)->Arg(200)->Arg(1000);

}  // namespace
}  // namespace disfilter

BENCHMARK_MAIN();
