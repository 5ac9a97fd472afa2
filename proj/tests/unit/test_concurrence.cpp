#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "concgraph/concurrence.hpp"
#include "concgraph/error.hpp"
#include "concgraph/marginals.hpp"
#include "oracles.hpp"

using namespace concgraph;

namespace {

std::vector<Observation> random_stream(std::size_t n, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Observation> out;
  for (std::size_t t = 0; t < length; ++t) {
    Observation o{t, {}};
    for (NodeId k = 0; k < n; ++k) {
      if (rng.uniform() < 0.3) o.active.push_back(k);
    }
    out.push_back(std::move(o));
  }
  return out;
}

WorldConfig edge_config(std::uint64_t seed) {
  WorldConfig c;
  c.width = c.height = 8;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Concurrence, SingleObservationCounts) {
  ConcurrenceGraph g(6);
  g.record(Observation{0, {1, 3, 5}});
  EXPECT_EQ(g.total(), 1u);
  EXPECT_EQ(g.count(1, 3), 1u);
  EXPECT_EQ(g.count(5, 1), 1u);
  EXPECT_EQ(g.count(3, 5), 1u);
  EXPECT_EQ(g.count(0, 1), 0u);
  EXPECT_EQ(g.node_count(3), 1u);
  EXPECT_EQ(g.node_count(2), 0u);
  EXPECT_EQ(g.weights().size(), 3u);
}

TEST(Concurrence, SmallActiveSetsAddNoEdges) {
  ConcurrenceGraph g(4);
  g.record(Observation{0, {}});
  g.record(Observation{1, {2}});
  EXPECT_EQ(g.total(), 2u);
  EXPECT_EQ(g.node_count(2), 1u);
  EXPECT_TRUE(g.weights().empty());
}

TEST(Concurrence, OutOfRangeLeavesGraphUnchanged) {
  ConcurrenceGraph g(4);
  g.record(Observation{0, {0, 1}});
  const ConcurrenceGraph before = g;
  EXPECT_THROW(g.record(Observation{1, {1, 4}}), DomainError);
  EXPECT_EQ(g, before);
  EXPECT_THROW(ConcurrenceGraph(3).weights(), DomainError);
}

TEST(Concurrence, CountsMatchPairLoopOracle) {
  const auto stream = random_stream(9, 500, 3);
  ConcurrenceGraph g(9);
  g.record(stream);
  const auto ref = oracle::count_pairs(9, stream);
  for (NodeId u = 0; u < 9; ++u) {
    for (NodeId v = 0; v < 9; ++v) {
      if (u != v) EXPECT_EQ(g.count(u, v), ref.at(u, v));
    }
  }
}

TEST(Concurrence, OrderIndependent) {
  auto stream = random_stream(7, 300, 4);
  ConcurrenceGraph a(7), b(7);
  a.record(stream);
  Rng rng(1);
  std::shuffle(stream.begin(), stream.end(), rng);
  b.record(stream);
  EXPECT_EQ(a, b);
}

TEST(Concurrence, MergeIsAssociativeAndMatchesSerial) {
  const auto stream = random_stream(6, 300, 5);
  ConcurrenceGraph x(6), y(6), z(6), all(6);
  for (std::size_t i = 0; i < stream.size(); ++i) (i < 100 ? x : i < 200 ? y : z).record(stream[i]);
  all.record(stream);
  ConcurrenceGraph left = x, right = y;
  left.merge(y);
  left.merge(z);
  right.merge(z);
  ConcurrenceGraph x2 = x;
  x2.merge(right);
  EXPECT_EQ(left, x2);
  EXPECT_EQ(left, all);
  EXPECT_THROW(x.merge(ConcurrenceGraph(5)), DomainError);
}

TEST(Concurrence, MultiplicityEqualsRepetition) {
  ConcurrenceGraph a(5), b(5);
  const Observation o{0, {0, 2, 4}};
  a.record(o, 3);
  for (int i = 0; i < 3; ++i) b.record(o);
  EXPECT_EQ(a, b);
}

TEST(Concurrence, IdentityWeightIsFrequency) {
  ConcurrenceGraph g(3);
  g.record(Observation{0, {0, 1}});
  g.record(Observation{1, {2}});
  const auto w = g.weights();
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].weight, 0.5);
  g.set_transform(WeightTransform::log1p);
  EXPECT_DOUBLE_EQ(g.weights()[0].weight, std::log1p(0.5));
}

TEST(Concurrence, RankIsPermutationOfEdgeRanks) {
  // Distinct counts make ranks {1..E}/E exactly.
  ConcurrenceGraph g(4, WeightTransform::rank);
  std::uint64_t t = 0;
  const std::vector<std::pair<NodeSet, int>> plan{{{0, 1}, 1}, {{0, 2}, 2}, {{1, 3}, 3}, {{2, 3}, 4}};
  for (const auto& [set, times] : plan) {
    for (int i = 0; i < times; ++i) g.record(Observation{t++, set});
  }
  auto w = g.weights();
  ASSERT_EQ(w.size(), 4u);
  std::vector<double> ranks;
  for (const auto& e : w) ranks.push_back(e.weight);
  std::sort(ranks.begin(), ranks.end());
  EXPECT_EQ(ranks, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}

TEST(Concurrence, TransformsPreserveOrdering) {
  const auto stream = random_stream(8, 400, 6);
  ConcurrenceGraph g(8);
  g.record(stream);
  std::vector<std::vector<WeightedEdge>> by;
  for (auto t : {WeightTransform::identity, WeightTransform::log1p, WeightTransform::rank}) {
    g.set_transform(t);
    by.push_back(g.weights());
  }
  for (std::size_t i = 0; i < by[0].size(); ++i) {
    for (std::size_t j = 0; j < by[0].size(); ++j) {
      const bool less = by[0][i].count < by[0][j].count;
      for (const auto& w : by) EXPECT_EQ(w[i].weight < w[j].weight, less);
    }
  }
}

TEST(Concurrence, TableWorldMatchesPairwiseTruth) {
  WorldConfig c;
  c.kind = WorldKind::explicit_table;
  Rng rng(8);
  std::vector<double> t(16);
  double sum = 0;
  for (double& x : t) sum += (x = rng.uniform());
  for (double& x : t) x /= sum;
  c.table = JointDistribution<double>(4, t);
  c.seed = 9;
  const auto world = make_world(c);
  const std::uint64_t n = 10000;
  const auto g = accumulate(*world, 0, n);
  const auto truth = pairwise_truth(*c.table);
  for (NodeId a = 0; a < 4; ++a) {
    for (NodeId b = a + 1; b < 4; ++b) {
      EXPECT_TRUE(oracle::within_binomial_ci(static_cast<double>(g.count(a, b)), n, truth[a][b]))
          << a << "," << b << ": " << g.count(a, b) << " vs " << truth[a][b];
    }
  }
}

TEST(Concurrence, HomogeneityTrivialCases) {
  ConcurrenceGraph g(3);
  g.record(Observation{0, {0, 1, 2}});
  EXPECT_TRUE(g.marginal_homogeneity(0.0).homogeneous);
  EXPECT_THROW(ConcurrenceGraph(3).marginal_homogeneity(0.1), DomainError);
}

TEST(Concurrence, HomogeneityFlagsAnisotropy) {
  auto c = edge_config(11);
  c.anisotropy = 1.0;
  const auto g = accumulate(EdgeWorld(c), 0, 20000, 4);
  const auto r = g.marginal_homogeneity(0.1 * g.marginal_homogeneity(0).mean_rate);
  EXPECT_FALSE(r.homogeneous);
}

TEST(Concurrence, HomogeneityHoldsOnSymmetrizedTorus) {
  auto c = edge_config(12);
  c.toroidal = true;
  c.invariances = {Invariance::translation, Invariance::rotation90};
  const auto g = accumulate(EdgeWorld(c), 0, 100000, 4);
  EXPECT_LT(g.marginal_homogeneity(0.02).max_deviation, 0.02);
  EXPECT_TRUE(g.marginal_homogeneity(0.02).homogeneous);
}

TEST(Concurrence, FromCountsRoundTrip) {
  const auto stream = random_stream(6, 200, 7);
  ConcurrenceGraph g(6, WeightTransform::log1p);
  g.record(stream);
  const auto nodes = std::vector<std::uint64_t>(g.node_counts().begin(), g.node_counts().end());
  const auto pairs = std::vector<std::uint64_t>(g.packed_pair_counts().begin(), g.packed_pair_counts().end());
  const auto back = ConcurrenceGraph::from_counts(6, g.total(), nodes, pairs, g.transform());
  EXPECT_EQ(back, g);
  auto bad = pairs;
  bad[0] = g.total() + 1;
  EXPECT_THROW(ConcurrenceGraph::from_counts(6, g.total(), nodes, bad, g.transform()), DomainError);
}

TEST(Concurrence, PackedIndexEnumeratesPairs) {
  const ConcurrenceGraph g(7);
  std::size_t expected = 0;
  for (NodeId u = 0; u < 7; ++u) {
    for (NodeId v = u + 1; v < 7; ++v) EXPECT_EQ(g.packed_index(u, v), expected++);
  }
  EXPECT_EQ(expected, g.packed_pair_counts().size());
}
