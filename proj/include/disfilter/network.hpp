#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "disfilter/linalg.hpp"

namespace disfilter {

using Edge = std::pair<int, int>;

/// Connected undirected graph. Nodes are 0-indexed; every neighborhood
/// contains the node itself and is sorted ascending.
class Network {
 public:
  int node_count() const { return static_cast<int>(neighborhoods_.size()); }
  /// Normalized (u < v), sorted, without duplicates.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighborhood(int l) const { return neighborhoods_.at(l); }
  int degree(int l) const { return static_cast<int>(neighborhood(l).size()) - 1; }

 private:
  friend Network build_network(int node_count, const std::vector<Edge>& edges);
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighborhoods_;
};

/// Validates and builds a network. Rejects out-of-range indices, self
/// edges and disconnected graphs (the message lists the components).
/// Duplicate edges are merged.
Network build_network(int node_count, const std::vector<Edge>& edges);

/// Random connected graph: a random spanning tree plus random chords until
/// `edge_count` edges exist.
Network random_connected_network(int node_count, int edge_count, std::uint64_t seed);

/// Random connected graph with exactly one degree-1 node. Built from a
/// spanning tree over the other nodes, a pendant attached last, and chords
/// that avoid the pendant; retried until the degree constraint holds.
/// Requires node_count >= 3.
Network generate_topology(int node_count, int edge_count, std::uint64_t seed);

/// 20 nodes, 40 links, a single degree-1 node.
Network generate_tracking_topology(std::uint64_t seed);

/// Nodes of degree 1.
std::vector<int> pendant_nodes(const Network& net);

/// Nodes reachable from l within k hops, sorted.
std::vector<int> k_hop_neighborhood(const Network& net, int l, int k);

/// Largest shortest-path distance.
int diameter(const Network& net);

struct Primitivity {
  bool primitive = false;
  int exponent = 0;  // smallest m with C^m > 0 entrywise; 0 when not primitive
};

/// Searches m up to (n-1)·n + 1 on the zero pattern of C. Throws
/// ConfigError on negative entries or a non-square input.
Primitivity is_primitive(const MatrixXd& c);

/// Row-stochastic, nonnegative, primitive combination weights supported on
/// the neighborhoods of a network.
class CombinationMatrix {
 public:
  /// Throws ConfigError if any invariant fails.
  CombinationMatrix(const Network& net, MatrixXd weights);

  const MatrixXd& matrix() const { return c_; }
  double operator()(int l, int i) const { return c_(l, i); }
  int size() const { return static_cast<int>(c_.rows()); }
  int primitivity_exponent() const { return exponent_; }

 private:
  MatrixXd c_;
  int exponent_ = 0;
};

/// c_{l,i} = 1/|N_l| on the neighborhood.
CombinationMatrix uniform_weights(const Network& net);

/// Metropolis weights: 1/(1 + max(d_l, d_i)) off the diagonal, remainder on
/// the diagonal.
CombinationMatrix metropolis_weights(const Network& net);

/// Edge-list exchange format: a `nodes <n>` header followed by one `u v`
/// pair per line, 0-indexed. Blank lines and `#` comments are ignored.
Network read_topology(std::istream& in);
void write_topology(std::ostream& out, const Network& net);

}  // namespace disfilter
