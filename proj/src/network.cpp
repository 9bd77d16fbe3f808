#include "disfilter/network.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "disfilter/errors.hpp"

namespace disfilter {
namespace {

// Connected components of an adjacency list, each sorted.
std::vector<std::vector<int>> components(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::vector<int> comp;
    std::queue<int> frontier;
    frontier.push(s);
    label[s] = static_cast<int>(out.size());
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      comp.push_back(u);
      for (int v : adj[u]) {
        if (label[v] < 0) {
          label[v] = label[s];
          frontier.push(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<int> hop_distances(const Network& net, int source) {
  std::vector<int> dist(net.node_count(), -1);
  std::queue<int> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : net.neighborhood(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

int max_edges(int n) { return n * (n - 1) / 2; }

}  // namespace

Network build_network(int node_count, const std::vector<Edge>& edges) {
  if (node_count < 1) throw ConfigError("a network needs at least one node");
  std::set<Edge> unique;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      std::ostringstream msg;
      msg << "edge (" << u << ", " << v << ") references a node outside [0, " << node_count << ")";
      throw ConfigError(msg.str());
    }
    if (u == v) {
      std::ostringstream msg;
      msg << "self edge on node " << u << " (self-inclusion is implicit)";
      throw ConfigError(msg.str());
    }
    unique.insert({std::min(u, v), std::max(u, v)});
  }

  std::vector<std::vector<int>> adj(node_count);
  for (auto [u, v] : unique) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  const auto comps = components(adj);
  if (comps.size() > 1) {
    std::ostringstream msg;
    msg << "network is disconnected; components:";
    for (const auto& comp : comps) {
      msg << " {";
      for (std::size_t i = 0; i < comp.size(); ++i) msg << (i ? "," : "") << comp[i];
      msg << "}";
    }
    throw ConfigError(msg.str());
  }

  Network net;
  net.edges_.assign(unique.begin(), unique.end());
  net.neighborhoods_.resize(node_count);
  for (int l = 0; l < node_count; ++l) {
    auto& hood = net.neighborhoods_[l];
    hood = adj[l];
    hood.push_back(l);
    std::sort(hood.begin(), hood.end());
  }
  return net;
}

Network random_connected_network(int node_count, int edge_count, std::uint64_t seed) {
  if (node_count < 1) throw ConfigError("a network needs at least one node");
  if (edge_count < node_count - 1 || edge_count > max_edges(node_count))
    throw ConfigError("edge count cannot form a connected simple graph");
  std::mt19937_64 rng(seed);
  std::vector<int> order(node_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::set<Edge> edges;
  for (int k = 1; k < node_count; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    const int u = order[k];
    const int v = order[pick(rng)];
    edges.insert({std::min(u, v), std::max(u, v)});
  }
  std::uniform_int_distribution<int> any(0, node_count - 1);
  while (static_cast<int>(edges.size()) < edge_count) {
    const int u = any(rng);
    const int v = any(rng);
    if (u != v) edges.insert({std::min(u, v), std::max(u, v)});
  }
  return build_network(node_count, {edges.begin(), edges.end()});
}

Network generate_topology(int node_count, int edge_count, std::uint64_t seed) {
  if (node_count < 3) throw ConfigError("a single-pendant topology needs at least 3 nodes");
  // Core of node_count-1 nodes plus one pendant link.
  const int core = node_count - 1;
  if (edge_count < node_count || edge_count > max_edges(core) + 1)
    throw ConfigError("edge count incompatible with exactly one degree-1 node");

  std::mt19937_64 rng(seed);
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<int> label(node_count);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    const int pendant = label.back();

    std::set<Edge> edges;
    std::vector<int> degree(node_count, 0);
    auto add = [&](int u, int v) {
      if (u == v) return false;
      const Edge e{std::min(u, v), std::max(u, v)};
      if (!edges.insert(e).second) return false;
      ++degree[u];
      ++degree[v];
      return true;
    };

    for (int k = 1; k < core; ++k) {
      std::uniform_int_distribution<int> pick(0, k - 1);
      add(label[k], label[pick(rng)]);
    }
    std::uniform_int_distribution<int> core_pick(0, core - 1);
    add(pendant, label[core_pick(rng)]);

    // Lift the tree's leaves off degree 1 first, then fill with random chords.
    for (int k = 0; k < core && static_cast<int>(edges.size()) < edge_count; ++k) {
      const int u = label[k];
      while (degree[u] == 1 && static_cast<int>(edges.size()) < edge_count) {
        add(u, label[core_pick(rng)]);
      }
    }
    int guard = 0;
    while (static_cast<int>(edges.size()) < edge_count && guard++ < 100 * edge_count) {
      add(label[core_pick(rng)], label[core_pick(rng)]);
    }

    if (static_cast<int>(edges.size()) != edge_count) continue;
    if (std::count(degree.begin(), degree.end(), 1) != 1) continue;
    return build_network(node_count, {edges.begin(), edges.end()});
  }
  throw ConfigError("could not generate a topology with exactly one degree-1 node");
}

Network generate_tracking_topology(std::uint64_t seed) { return generate_topology(20, 40, seed); }

std::vector<int> pendant_nodes(const Network& net) {
  std::vector<int> out;
  for (int l = 0; l < net.node_count(); ++l)
    if (net.degree(l) == 1) out.push_back(l);
  return out;
}

std::vector<int> k_hop_neighborhood(const Network& net, int l, int k) {
  if (l < 0 || l >= net.node_count()) throw ConfigError("node index out of range");
  if (k < 0) throw ConfigError("hop count must be nonnegative");
  const auto dist = hop_distances(net, l);
  std::vector<int> out;
  for (int i = 0; i < net.node_count(); ++i)
    if (dist[i] >= 0 && dist[i] <= k) out.push_back(i);
  return out;
}

int diameter(const Network& net) {
  int d = 0;
  for (int l = 0; l < net.node_count(); ++l) {
    const auto dist = hop_distances(net, l);
    d = std::max(d, *std::max_element(dist.begin(), dist.end()));
  }
  return d;
}

Primitivity is_primitive(const MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() == 0) throw ConfigError("matrix must be square and non-empty");
  if ((c.array() < 0.0).any()) throw ConfigError("primitivity is defined for nonnegative matrices");
  using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  const Pattern base = (c.array() > 0.0).cast<int>();
  const long n = c.rows();
  const long bound = (n - 1) * n + 1;
  Pattern power = base;
  for (long m = 1; m <= bound; ++m) {
    if ((power.array() > 0).all()) return {true, static_cast<int>(m)};
    power = ((power * base).array() > 0).cast<int>();
  }
  return {false, 0};
}

CombinationMatrix::CombinationMatrix(const Network& net, MatrixXd weights) : c_(std::move(weights)) {
  const int n = net.node_count();
  if (c_.rows() != n || c_.cols() != n) throw ConfigError("combination matrix must be |N| x |N|");
  for (int l = 0; l < n; ++l) {
    const auto& hood = net.neighborhood(l);
    double row = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = c_(l, i);
      if (w < 0.0) {
        std::ostringstream msg;
        msg << "negative combination weight c(" << l << "," << i << ") = " << w;
        throw ConfigError(msg.str());
      }
      if (w != 0.0 && !std::binary_search(hood.begin(), hood.end(), i)) {
        std::ostringstream msg;
        msg << "combination weight c(" << l << "," << i << ") is nonzero but " << i
            << " is not a neighbor of " << l;
        throw ConfigError(msg.str());
      }
      row += w;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "row " << l << " of the combination matrix sums to " << row;
      throw ConfigError(msg.str());
    }
  }
  const auto prim = is_primitive(c_);
  if (!prim.primitive) throw ConfigError("combination matrix is not primitive");
  exponent_ = prim.exponent;
}

CombinationMatrix uniform_weights(const Network& net) {
  const int n = net.node_count();
  MatrixXd c = MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    const auto& hood = net.neighborhood(l);
    const double w = 1.0 / static_cast<double>(hood.size());
    for (int i : hood) c(l, i) = w;
  }
  return CombinationMatrix(net, std::move(c));
}

CombinationMatrix metropolis_weights(const Network& net) {
  const int n = net.node_count();
  MatrixXd c = MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    double off = 0.0;
    for (int i : net.neighborhood(l)) {
      if (i == l) continue;
      c(l, i) = 1.0 / (1.0 + std::max(net.degree(l), net.degree(i)));
      off += c(l, i);
    }
    c(l, l) = 1.0 - off;
  }
  return CombinationMatrix(net, std::move(c));
}

Network read_topology(std::istream& in) {
  std::string line;
  int nodes = -1;
  std::vector<Edge> edges;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    if (nodes < 0) {
      if (first != "nodes" || !(fields >> nodes) || nodes < 1)
        throw ConfigError("topology file must start with 'nodes <n>'");
      continue;
    }
    int u = 0;
    int v = 0;
    std::istringstream pair(line);
    std::string rest;
    if (!(pair >> u >> v) || (pair >> rest)) {
      std::ostringstream msg;
      msg << "topology file line " << line_no << ": expected 'u v'";
      throw ConfigError(msg.str());
    }
    edges.emplace_back(u, v);
  }
  if (nodes < 0) throw ConfigError("topology file is empty");
  return build_network(nodes, edges);
}

void write_topology(std::ostream& out, const Network& net) {
  out << "nodes " << net.node_count() << '\n';
  for (auto [u, v] : net.edges()) out << u << ' ' << v << '\n';
}

}  // namespace disfilter
