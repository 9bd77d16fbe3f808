#include "disfilter/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "disfilter/errors.hpp"
#include "disfilter/random.hpp"

namespace disfilter {
namespace {

// Shortest representation that round-trips.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

VectorXd to_vector(const std::vector<double>& values, Eigen::Index dim) {
  if (values.empty()) return VectorXd::Zero(dim);
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int default_links(int nodes) {
  if (nodes <= 3) return nodes - 1;
  const int core = nodes - 1;
  return std::clamp(2 * nodes, nodes, core * (core - 1) / 2 + 1);
}

Network scenario_network(const ExperimentConfig& config) {
  if (config.topology_file) {
    std::ifstream in(*config.topology_file);
    if (!in) throw ConfigError("cannot open topology file '" + *config.topology_file + "'");
    return read_topology(in);
  }
  const std::uint64_t seed = config.topology_seed.value_or(config.seed);
  if (config.nodes == 1) return build_network(1, {});
  if (config.nodes == 2) return build_network(2, {{0, 1}});
  // No 3-node graph has exactly one pendant; fall back to the path.
  if (config.nodes == 3 && config.links <= 0) return build_network(3, {{0, 1}, {1, 2}});
  return generate_topology(config.nodes, config.links > 0 ? config.links : default_links(config.nodes),
                           seed);
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

StabilityCertificate central_certificate(const DistributedModel& dm, const MatrixXd& m, int k_max) {
  const MatrixXd h = dm.stacked_observation();
  const MatrixXd g = centralized_gain(m, dm.observers());
  const Eigen::Index n = dm.state_dim();
  StackedErrorSystem sys;
  sys.node_count = 1;
  sys.state_dim = n;
  sys.C_cal = MatrixXd::Identity(n, n);
  sys.P_cal = MatrixXd::Identity(n, n) - g * h;
  sys.F_cal = sys.P_cal * dm.model().A();
  sys.G_cal = g;

  StabilityCertificate cert;
  cert.detectable = pbh_detectable(dm.model().A(), h);
  cert.stabilizable = pbh_stabilizable(dm.model().A(), psd_sqrt(dm.model().sigma_v()));
  const auto contraction = contraction_certificate(sys, k_max);
  cert.rho_cf = contraction.rho;
  cert.contraction_exponent = contraction.exponent;
  cert.centralized_rho = centralized_closed_loop_radius(m, dm.model(), dm.observers());
  cert.primitivity_exponent = dm.weights().primitivity_exponent();
  return cert;
}

void record_errors(std::vector<RunRecord>& out, std::size_t step, std::size_t run, const VectorXd& truth,
                   const std::vector<VectorXd>& estimates) {
  double total = 0.0;
  for (std::size_t l = 0; l < estimates.size(); ++l) {
    const double sq = (truth - estimates[l]).squaredNorm();
    total += sq;
    out.push_back({step, run, "sq_error", std::to_string(l), sq});
  }
  out.push_back({step, run, "avg_sq_error", "network", total / static_cast<double>(estimates.size())});
}

void record_eigen_range(std::vector<RunRecord>& out, std::size_t step, const NetworkFilter& filter) {
  const EigenRange range = filter.schedule() == Schedule::classical
                               ? eigen_range_from_information(filter.information_matrices())
                               : eigen_range(filter.riccati_matrices());
  out.push_back({step, 0, "min_eig", "network", range.min});
  out.push_back({step, 0, "max_eig", "network", range.max});
}

}  // namespace

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "uniform") return WeightScheme::uniform;
  if (name == "metropolis") return WeightScheme::metropolis;
  throw ConfigError("unknown weight scheme '" + std::string(name) + "'");
}

ObserverLayout parse_observer_layout(std::string_view name) {
  if (name == "one-vertical") return ObserverLayout::one_vertical;
  if (name == "all-horizontal") return ObserverLayout::all_horizontal;
  if (name == "full") return ObserverLayout::full;
  throw ConfigError("unknown observer layout '" + std::string(name) + "'");
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(name) + "'");
}

std::string_view to_string(WeightScheme scheme) {
  return scheme == WeightScheme::uniform ? "uniform" : "metropolis";
}

std::string_view to_string(ObserverLayout layout) {
  switch (layout) {
    case ObserverLayout::one_vertical: return "one-vertical";
    case ObserverLayout::all_horizontal: return "all-horizontal";
    case ObserverLayout::full: return "full";
  }
  return "unknown";
}

std::string_view to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "json"; }

void ExperimentConfig::validate() const {
  if (!(dt > 0.0) || !(q > 0.0) || !(r > 0.0)) throw ConfigError("dt, q and r must be positive");
  if (nodes < 1) throw ConfigError("nodes must be at least 1");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (!(initial_riccati_scale > 0.0)) throw ConfigError("initial Riccati scale must be positive");
  if (!initial_state.empty() && initial_state.size() != 4)
    throw ConfigError("initial state needs 4 components (x, y, vx, vy)");
  if (!initial_estimate.empty() && initial_estimate.size() != 4)
    throw ConfigError("initial estimate needs 4 components (x, y, vx, vy)");
  if (contraction_k_max < 1) throw ConfigError("contraction k_max must be at least 1");
  if (max_riccati_iterations < 1) throw ConfigError("max Riccati iterations must be at least 1");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out{
      {"dt", format_double(dt)},
      {"q", format_double(q)},
      {"r", format_double(r)},
      {"nodes", std::to_string(nodes)},
      {"links", std::to_string(links)},
      {"topology_seed", std::to_string(topology_seed.value_or(seed))},
      {"topology_file", topology_file.value_or("")},
      {"weights", std::string(to_string(weights))},
      {"observers", std::string(to_string(observers))},
      {"schedule", std::string(to_string(schedule))},
      {"steps", std::to_string(steps)},
      {"runs", std::to_string(runs)},
      {"seed", std::to_string(seed)},
      {"freeze_gains_after", freeze_gains_after ? std::to_string(*freeze_gains_after) : "none"},
      {"initial_riccati_scale", format_double(initial_riccati_scale)},
      {"initial_state", join(initial_state)},
      {"initial_estimate", join(initial_estimate)},
      {"format", std::string(to_string(format))},
  };
  return out;
}

DistributedModel build_scenario(const ExperimentConfig& config) {
  config.validate();
  const TrackingModel tracking = make_tracking_model(config.dt, config.q, config.r);
  Network net = scenario_network(config);
  const int n = net.node_count();

  MatrixXd h_full = MatrixXd::Zero(2, 4);
  h_full(0, 0) = 1.0;
  h_full(1, 1) = 1.0;
  const MatrixXd r_full = config.r * MatrixXd::Identity(2, 2);
  const NodeObservationModel full(h_full, r_full, r_full);

  std::vector<NodeObservationModel> observers;
  observers.reserve(static_cast<std::size_t>(n));
  switch (config.observers) {
    case ObserverLayout::full:
      observers.assign(static_cast<std::size_t>(n), full);
      break;
    case ObserverLayout::all_horizontal:
      observers.assign(static_cast<std::size_t>(n), tracking.horizontal);
      break;
    case ObserverLayout::one_vertical: {
      if (n == 1) {
        observers.push_back(full);
        break;
      }
      int vertical = 0;
      for (int l = 1; l < n; ++l)
        if (net.degree(l) < net.degree(vertical)) vertical = l;
      for (int l = 0; l < n; ++l) observers.push_back(l == vertical ? tracking.vertical : tracking.horizontal);
      break;
    }
  }

  CombinationMatrix weights =
      config.weights == WeightScheme::uniform ? uniform_weights(net) : metropolis_weights(net);
  return DistributedModel(tracking.model, std::move(observers), std::move(net), std::move(weights));
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t run) { return derive_key(seed, run); }

StabilityCertificate certificate_for_gains(const DistributedModel& dm, std::span<const MatrixXd> gains,
                                           const MatrixXd& centralized_m, int k_max) {
  StabilityCertificate cert;
  cert.detectable = pbh_detectable(dm.model().A(), dm.stacked_observation());
  cert.stabilizable = pbh_stabilizable(dm.model().A(), psd_sqrt(dm.model().sigma_v()));
  const auto sys = build_stacked_system(dm.weights(), gains, dm.observers(), dm.model());
  const auto contraction = contraction_certificate(sys, k_max);
  cert.rho_cf = contraction.rho;
  cert.contraction_exponent = contraction.exponent;
  cert.centralized_rho = centralized_closed_loop_radius(centralized_m, dm.model(), dm.observers());
  cert.primitivity_exponent = dm.weights().primitivity_exponent();
  return cert;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const DistributedModel dm = build_scenario(config);
  const VectorXd x1 = to_vector(config.initial_state, dm.state_dim());
  const VectorXd x_hat1 = to_vector(config.initial_estimate, dm.state_dim());
  FilterOptions options;
  options.initial_riccati_scale = config.initial_riccati_scale;
  options.freeze_gains_after = config.freeze_gains_after;
  options.parallel = config.runs == 1;

  std::vector<std::vector<RunRecord>> per_run(config.runs);
  std::vector<std::exception_ptr> errors(config.runs);
  std::vector<MatrixXd> final_gains;
  std::optional<MatrixXd> final_central_m;
  double final_change = 0.0;

  const long runs = static_cast<long>(config.runs);
#pragma omp parallel for schedule(dynamic) if (runs > 1)
  for (long run = 0; run < runs; ++run) {
    try {
      const auto r = static_cast<std::size_t>(run);
      auto& records = per_run[r];
      const Trajectory traj =
          simulate_trajectory(dm.model(), dm.observers(), config.steps, run_seed(config.seed, r), x1);
      NetworkFilter filter(dm, config.schedule, options, x_hat1);
      record_errors(records, 1, r, traj.states[0], filter.estimates());
      if (r == 0) record_eigen_range(records, 1, filter);
      std::vector<VectorXd> y(static_cast<std::size_t>(dm.node_count()));
      for (std::size_t t = 1; t < config.steps; ++t) {
        for (int l = 0; l < dm.node_count(); ++l) y[l] = traj.observations[l][t];
        filter.step(y);
        record_errors(records, t + 1, r, traj.states[t], filter.estimates());
        if (r == 0) record_eigen_range(records, t + 1, filter);
      }
      if (r == 0) {
        final_gains = filter.gains();
        final_change = filter.last_riccati_change();
        if (config.schedule == Schedule::central) final_central_m = filter.central().M;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(run)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport report;
  report.config = config;
  for (auto& records : per_run)
    report.records.insert(report.records.end(), std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));

  const MatrixXd m0 = config.initial_riccati_scale * MatrixXd::Identity(dm.state_dim(), dm.state_dim());
  if (final_central_m) {
    report.certificate = central_certificate(dm, *final_central_m, config.contraction_k_max);
  } else {
    const auto central = converge_centralized_riccati(m0, dm.model(), dm.observers(),
                                                      config.convergence_tol, config.max_riccati_iterations);
    report.certificate = certificate_for_gains(dm, final_gains, central.M, config.contraction_k_max);
  }
  report.certificate.riccati_iterations = config.steps - 1;
  report.certificate.riccati_converged = final_change < config.convergence_tol;
  return report;
}

StabilityCertificate certify(const ExperimentConfig& config) {
  if (config.schedule == Schedule::central)
    throw ConfigError("certify applies to the distributed schedules (modern|classical)");
  const DistributedModel dm = build_scenario(config);
  const MatrixXd m0 = config.initial_riccati_scale * MatrixXd::Identity(dm.state_dim(), dm.state_dim());
  const auto distributed = converge_distributed_riccati(dm, config.schedule, m0, config.convergence_tol,
                                                        config.max_riccati_iterations);
  const auto central = converge_centralized_riccati(m0, dm.model(), dm.observers(), config.convergence_tol,
                                                    config.max_riccati_iterations);
  std::vector<MatrixXd> gains;
  for (const auto& node : distributed.nodes) gains.push_back(node.G);
  StabilityCertificate cert = certificate_for_gains(dm, gains, central.M, config.contraction_k_max);
  cert.riccati_iterations = distributed.iterations;
  cert.riccati_converged = distributed.converged;
  return cert;
}

void write_csv(std::ostream& out, const ExperimentReport& report) {
  out << "# disfilter experiment report\n";
  if (!report.config.reproducible) out << "# generated: " << timestamp() << '\n';
  for (const auto& [key, value] : report.config.echo()) out << "# config." << key << ": " << value << '\n';
  out << "step,run,metric,node_or_agg,value\n";
  for (const auto& rec : report.records)
    out << rec.step << ',' << rec.run << ',' << rec.metric << ',' << rec.node_or_agg << ',' << format_double(rec.value)
        << '\n';

  const auto& cert = report.certificate;
  const std::size_t step = report.config.steps;
  auto row = [&](std::string_view metric, double value) {
    out << step << ",0," << metric << ",certificate," << format_double(value) << '\n';
  };
  row("detectable", cert.detectable ? 1.0 : 0.0);
  row("stabilizable", cert.stabilizable ? 1.0 : 0.0);
  row("rho_cf", cert.rho_cf);
  if (cert.contraction_exponent) row("contraction_exponent", *cert.contraction_exponent);
  row("centralized_rho", cert.centralized_rho);
  row("primitivity_exponent", cert.primitivity_exponent);
}

void write_json(std::ostream& out, const ExperimentReport& report) {
  nlohmann::ordered_json doc;
  if (!report.config.reproducible) doc["generated"] = timestamp();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.config.echo()) config[key] = value;
  doc["config"] = std::move(config);

  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& rec : report.records) {
    records.push_back({{"step", rec.step},
                       {"run", rec.run},
                       {"metric", rec.metric},
                       {"node_or_agg", rec.node_or_agg},
                       {"value", rec.value}});
  }
  doc["records"] = std::move(records);

  const auto& cert = report.certificate;
  doc["certificate"] = {
      {"detectable", cert.detectable},
      {"stabilizable", cert.stabilizable},
      {"rho_cf", cert.rho_cf},
      {"contraction_exponent",
       cert.contraction_exponent ? nlohmann::ordered_json(*cert.contraction_exponent) : nlohmann::ordered_json()},
      {"centralized_rho", cert.centralized_rho},
      {"primitivity_exponent", cert.primitivity_exponent},
      {"riccati_converged", cert.riccati_converged},
  };
  out << doc.dump(1) << '\n';
}

void write_certificate_report(std::ostream& out, const ExperimentConfig& config,
                              const StabilityCertificate& cert) {
  if (!config.reproducible) out << "generated: " << timestamp() << '\n';
  for (const auto& [key, value] : config.echo()) out << "config." << key << ": " << value << '\n';
  out << format_certificate(cert);
}

}  // namespace disfilter
