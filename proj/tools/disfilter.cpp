// Experiment runner: `disfilter run` simulates and filters the tracking
// scenario, `disfilter certify` runs the Riccati recursion to convergence
// and prints the stability certificate.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "disfilter/errors.hpp"
#include "disfilter/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalError = 2, kInconclusive = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace disfilter;

  CLI::App app{"Distributed Kalman filtering experiments and stability certificates"};
  app.set_config("--config", "", "key = value config file (TOML/INI)");
  app.require_subcommand(1);
  auto* run_cmd = app.add_subcommand("run", "simulate, filter and write per-step error/eigenvalue records");
  auto* certify_cmd = app.add_subcommand("certify", "converge the Riccati recursion and certify stability");
  run_cmd->fallthrough();
  certify_cmd->fallthrough();

  ExperimentConfig config;
  std::string schedule = "modern";
  std::string weights = "uniform";
  std::string observers = "one-vertical";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> freeze;
  std::optional<std::uint64_t> topology_seed;
  std::optional<std::string> topology_file;

  app.add_option("--schedule", schedule, "gain schedule")
      ->check(CLI::IsMember({"central", "modern", "classical"}));
  app.add_option("--steps", config.steps, "time steps per run")->check(CLI::PositiveNumber);
  app.add_option("--runs", config.runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "simulation seed")->envname("DISFILTER_SEED");
  app.add_option("--nodes", config.nodes, "number of nodes of a generated topology");
  app.add_option("--links", config.links, "number of links of a generated topology (0: 2*nodes)");
  app.add_option("--topology-seed", topology_seed, "seed of the generated topology (default: --seed)");
  app.add_option("--topology-file", topology_file, "edge-list topology file")->check(CLI::ExistingFile);
  app.add_option("--weights", weights, "combination weights")->check(CLI::IsMember({"uniform", "metropolis"}));
  app.add_option("--observers", observers, "observer layout")
      ->check(CLI::IsMember({"one-vertical", "all-horizontal", "full"}));
  app.add_option("--dt", config.dt, "sampling interval [s]");
  app.add_option("--q", config.q, "process-noise intensity");
  app.add_option("--r", config.r, "observation-noise variance and weight");
  app.add_option("--freeze-gains-after", freeze, "keep gains fixed after N steps");
  app.add_option("--initial-scale", config.initial_riccati_scale, "M_1 = scale * I");
  app.add_option("--initial-state", config.initial_state, "x_1 as x y vx vy")->expected(4);
  app.add_option("--initial-estimate", config.initial_estimate, "initial estimate as x y vx vy")->expected(4);
  app.add_option("--tol", config.convergence_tol, "Riccati convergence tolerance on ||dM||");
  app.add_option("--max-iterations", config.max_riccati_iterations, "Riccati iteration budget");
  app.add_option("--k-max", config.contraction_k_max, "largest power searched for contraction");
  app.add_option("--output", config.output, "output path (default: stdout)");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--reproducible", config.reproducible, "omit the timestamp header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    config.schedule = parse_schedule(schedule);
    config.weights = parse_weight_scheme(weights);
    config.observers = parse_observer_layout(observers);
    config.format = parse_output_format(format);
    if (seed) config.seed = *seed;
    config.freeze_gains_after = freeze;
    config.topology_seed = topology_seed;
    config.topology_file = topology_file;
    config.validate();

    std::ofstream file;
    if (!config.output.empty()) {
      file.open(config.output);
      if (!file) throw ConfigError("cannot write output file '" + config.output + "'");
    }
    std::ostream& out = config.output.empty() ? std::cout : file;

    if (*run_cmd) {
      const ExperimentReport report = run_experiment(config);
      if (config.format == OutputFormat::csv) {
        write_csv(out, report);
      } else {
        write_json(out, report);
      }
      out.flush();
      if (!out) throw ConfigError("failed writing output");
      return kOk;
    }

    const StabilityCertificate cert = certify(config);
    write_certificate_report(out, config, cert);
    out.flush();
    if (!out) throw ConfigError("failed writing output");
    return cert.conclusive() ? kOk : kInconclusive;
  } catch (const ConfigError& e) {
    std::cerr << "disfilter: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "disfilter: numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}
