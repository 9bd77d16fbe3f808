#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "disfilter/errors.hpp"
#include "disfilter/network.hpp"

namespace disfilter {
namespace {

TEST(BuildNetwork, Singleton) {
  const Network net = build_network(1, {});
  EXPECT_EQ(net.node_count(), 1);
  EXPECT_EQ(net.neighborhood(0), std::vector<int>{0});
}

TEST(BuildNetwork, DumbbellIsSymmetricWithSelfInclusion) {
  const Network net = build_network(2, {{0, 1}});
  EXPECT_EQ(net.neighborhood(0), (std::vector<int>{0, 1}));
  EXPECT_EQ(net.neighborhood(1), (std::vector<int>{0, 1}));
}

TEST(BuildNetwork, RejectsIsolatedNodeListingComponents) {
  try {
    build_network(3, {{0, 1}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("{0,1}"), std::string::npos) << what;
    EXPECT_NE(what.find("{2}"), std::string::npos) << what;
  }
}

TEST(BuildNetwork, RejectsBadIndicesAndSelfEdges) {
  EXPECT_THROW(build_network(3, {{0, 3}}), ConfigError);
  EXPECT_THROW(build_network(3, {{-1, 2}}), ConfigError);
  EXPECT_THROW(build_network(2, {{0, 1}, {1, 1}}), ConfigError);
  EXPECT_THROW(build_network(0, {}), ConfigError);
}

TEST(BuildNetwork, MergesDuplicateEdges) {
  const Network net = build_network(3, {{0, 1}, {1, 0}, {1, 2}});
  EXPECT_EQ(net.edges().size(), 2u);
}

TEST(TrackingTopology, TwentyNodesFortyLinksOnePendant) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Network net = generate_tracking_topology(seed);
    EXPECT_EQ(net.node_count(), 20);
    EXPECT_EQ(net.edges().size(), 40u);
    int pendants = 0;
    for (int l = 0; l < net.node_count(); ++l)
      if (net.neighborhood(l).size() == 2) ++pendants;
    EXPECT_EQ(pendants, 1) << "seed " << seed;
    EXPECT_EQ(pendant_nodes(net).size(), 1u);
  }
}

TEST(TrackingTopology, DeterministicGivenSeed) {
  EXPECT_EQ(generate_tracking_topology(7).edges(), generate_tracking_topology(7).edges());
  EXPECT_NE(generate_tracking_topology(7).edges(), generate_tracking_topology(8).edges());
}

TEST(Topology, NeighborhoodsAreSymmetricAndSelfInclusive) {
  const Network net = generate_topology(15, 30, 4);
  for (int l = 0; l < net.node_count(); ++l) {
    const auto& hood = net.neighborhood(l);
    EXPECT_TRUE(std::binary_search(hood.begin(), hood.end(), l));
    for (int i : hood) {
      const auto& other = net.neighborhood(i);
      EXPECT_TRUE(std::binary_search(other.begin(), other.end(), l));
    }
  }
}

TEST(Topology, RejectsInfeasibleRequests) {
  EXPECT_THROW(generate_topology(2, 1, 0), ConfigError);
  EXPECT_THROW(generate_topology(5, 3, 0), ConfigError);
  EXPECT_THROW(generate_topology(5, 10, 0), ConfigError);
  EXPECT_THROW(random_connected_network(5, 3, 0), ConfigError);
}

TEST(UniformWeights, SmallCases) {
  EXPECT_EQ(uniform_weights(build_network(1, {})).matrix(), MatrixXd::Ones(1, 1));
  EXPECT_EQ(uniform_weights(build_network(2, {{0, 1}})).matrix(), MatrixXd::Constant(2, 2, 0.5));
}

TEST(UniformWeights, TrackingTopologyIsRowStochasticSparseAndPrimitive) {
  const Network net = generate_tracking_topology(1);
  const CombinationMatrix c = uniform_weights(net);
  for (int l = 0; l < c.size(); ++l) {
    EXPECT_NEAR(c.matrix().row(l).sum(), 1.0, 1e-12);
    for (int i = 0; i < c.size(); ++i) {
      const auto& hood = net.neighborhood(l);
      if (c(l, i) != 0.0) EXPECT_TRUE(std::binary_search(hood.begin(), hood.end(), i));
    }
  }
  // Oracle: explicit floating-point powers until entrywise positive.
  MatrixXd power = c.matrix();
  int m = 1;
  while (!(power.array() > 0.0).all() && m < 400) {
    power = power * c.matrix();
    ++m;
  }
  const auto prim = is_primitive(c.matrix());
  EXPECT_TRUE(prim.primitive);
  EXPECT_EQ(prim.exponent, m);
  EXPECT_EQ(c.primitivity_exponent(), m);
}

TEST(UniformWeights, AnyConnectedNetworkIsPrimitive) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int nodes = 2 + static_cast<int>(seed % 14);
    const int edges = nodes - 1 + static_cast<int>(seed % 3);
    const Network net =
        random_connected_network(nodes, std::min(edges, nodes * (nodes - 1) / 2), seed);
    EXPECT_TRUE(is_primitive(uniform_weights(net).matrix()).primitive);
    EXPECT_TRUE(is_primitive(metropolis_weights(net).matrix()).primitive);
  }
}

TEST(MetropolisWeights, SymmetricAndRowStochastic) {
  const Network net = generate_tracking_topology(3);
  const MatrixXd c = metropolis_weights(net).matrix();
  EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  for (int l = 0; l < c.rows(); ++l) EXPECT_NEAR(c.row(l).sum(), 1.0, 1e-12);
}

TEST(CombinationMatrix, RejectsViolations) {
  const Network net = build_network(3, {{0, 1}, {1, 2}});
  MatrixXd bad_sum = uniform_weights(net).matrix();
  bad_sum(0, 0) += 0.1;
  EXPECT_THROW(CombinationMatrix(net, bad_sum), ConfigError);

  MatrixXd off_pattern = uniform_weights(net).matrix();
  off_pattern(0, 2) = 0.1;
  off_pattern(0, 0) -= 0.1;
  EXPECT_THROW(CombinationMatrix(net, off_pattern), ConfigError);

  MatrixXd negative(3, 3);
  negative << 1.5, -0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5;
  EXPECT_THROW(CombinationMatrix(net, negative), ConfigError);

  // Row-stochastic and sparse but a permutation-like pattern is not primitive.
  MatrixXd periodic(3, 3);
  periodic << 0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0;
  EXPECT_THROW(CombinationMatrix(net, periodic), ConfigError);
}

TEST(IsPrimitive, HandCases) {
  const auto scalar = is_primitive(MatrixXd::Ones(1, 1));
  EXPECT_TRUE(scalar.primitive);
  EXPECT_EQ(scalar.exponent, 1);

  EXPECT_FALSE(is_primitive(MatrixXd::Identity(2, 2)).primitive);

  // 3-cycle with self loops: C² is already positive.
  const Network cycle = build_network(3, {{0, 1}, {1, 2}, {0, 2}});
  const auto tri = is_primitive(uniform_weights(cycle).matrix());
  EXPECT_TRUE(tri.primitive);
  EXPECT_LE(tri.exponent, 2);
  EXPECT_EQ(tri.exponent, 1);  // complete graph with self loops

  const Network path = build_network(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(is_primitive(uniform_weights(path).matrix()).exponent, 2);

  MatrixXd negative = MatrixXd::Ones(2, 2);
  negative(0, 1) = -1.0;
  EXPECT_THROW(is_primitive(negative), ConfigError);
}

TEST(KHop, BasicCases) {
  const Network path = build_network(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(k_hop_neighborhood(path, 0, 0), std::vector<int>{0});
  EXPECT_EQ(k_hop_neighborhood(path, 0, 1), (std::vector<int>{0, 1}));
  EXPECT_EQ(k_hop_neighborhood(path, 0, 2), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(k_hop_neighborhood(path, 1, 1), path.neighborhood(1));
  EXPECT_THROW(k_hop_neighborhood(path, 3, 1), ConfigError);
}

TEST(KHop, MonotoneAndReachesEveryNodeAtDiameter) {
  const Network net = generate_tracking_topology(2);
  const int d = diameter(net);
  for (int l = 0; l < net.node_count(); ++l) {
    std::vector<int> previous = k_hop_neighborhood(net, l, 0);
    for (int k = 1; k <= d; ++k) {
      const auto current = k_hop_neighborhood(net, l, k);
      EXPECT_TRUE(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
      previous = current;
    }
    EXPECT_EQ(previous.size(), 20u);
    EXPECT_EQ(k_hop_neighborhood(net, l, d + 3), previous);
  }
}

TEST(TopologyFile, RoundTripAndErrors) {
  const Network net = generate_tracking_topology(5);
  std::stringstream buffer;
  write_topology(buffer, net);
  const Network back = read_topology(buffer);
  EXPECT_EQ(back.edges(), net.edges());
  EXPECT_EQ(back.node_count(), 20);

  std::istringstream commented("# a triangle\nnodes 3\n0 1\n\n1 2 # chord\n0 2\n");
  EXPECT_EQ(read_topology(commented).edges().size(), 3u);

  std::istringstream missing_header("0 1\n");
  EXPECT_THROW(read_topology(missing_header), ConfigError);
  std::istringstream bad_line("nodes 3\n0 1 2\n");
  EXPECT_THROW(read_topology(bad_line), ConfigError);
  std::istringstream disconnected("nodes 3\n0 1\n");
  EXPECT_THROW(read_topology(disconnected), ConfigError);
}

}  // namespace
}  // namespace disfilter
