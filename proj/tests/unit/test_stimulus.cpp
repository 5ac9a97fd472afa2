#include <gtest/gtest.h>

#include <map>

#include "concgraph/concurrence.hpp"
#include "concgraph/error.hpp"
#include "concgraph/stimulus.hpp"
#include "oracles.hpp"

using namespace concgraph;

namespace {

WorldConfig edge_config(int side, std::uint64_t seed) {
  WorldConfig c;
  c.kind = WorldKind::edge_image;
  c.width = c.height = side;
  c.seed = seed;
  return c;
}

/// Share of draws in which some horizontal (bin 0) detector is active, and likewise vertical.
std::pair<double, double> orientation_rates(const EdgeWorld& w, std::uint64_t draws) {
  double h = 0, v = 0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    for (NodeId id : w.draw(i).active) (w.geometry()[id].omega == 0.0 ? h : v) += 1;
  }
  return {h / static_cast<double>(draws), v / static_cast<double>(draws)};
}

/// State of the window nodes as a bitmask.
unsigned window_state(const NodeSet& active, const std::vector<NodeId>& window) {
  unsigned s = 0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    if (std::binary_search(active.begin(), active.end(), window[k])) s |= 1U << k;
  }
  return s;
}

/// Two-sample chi-square statistic over the cells present in either sample.
double two_sample_chi2(const std::map<unsigned, double>& a, const std::map<unsigned, double>& b, double na, double nb,
                       int* cells) {
  std::map<unsigned, std::pair<double, double>> joint;
  for (const auto& [k, c] : a) joint[k].first = c;
  for (const auto& [k, c] : b) joint[k].second = c;
  double chi2 = 0;
  *cells = 0;
  for (const auto& [k, ab] : joint) {
    const double total = ab.first + ab.second;
    if (total < 5) continue;  // too sparse for the approximation
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    chi2 += (ab.first - ea) * (ab.first - ea) / ea + (ab.second - eb) * (ab.second - eb) / eb;
    ++*cells;
  }
  return chi2;
}

// Chi-square 99% critical values by degrees of freedom (1..20).
constexpr double kChi2Crit99[] = {0,     6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209,
                                  24.725, 26.217, 27.688, 29.141, 30.578, 32.000, 33.409, 34.805, 36.191, 37.566};

}  // namespace

TEST(Stimulus, EdgeWorldIsDeterministic) {
  const EdgeWorld a(edge_config(8, 7));
  const EdgeWorld b(edge_config(8, 7));
  EXPECT_EQ(a.n(), 8u * 8u * 2u);
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(a.draw(i), b.draw(i));
}

TEST(Stimulus, DifferentSeedsDiffer) {
  ObservationStream s7(make_world(edge_config(8, 7)));
  ObservationStream s8(make_world(edge_config(8, 8)));
  EXPECT_NE(s7.sample(10), s8.sample(10));
}

TEST(Stimulus, SampleZeroIsEmptyAndCursorAdvances) {
  ObservationStream s(make_world(edge_config(8, 1)));
  EXPECT_TRUE(s.sample(0).empty());
  const auto first = s.sample(5);
  EXPECT_EQ(s.cursor(), 5u);
  const auto next = s.sample(5);
  EXPECT_EQ(next.front().timestamp, 5u);
  EXPECT_EQ(first.back().timestamp, 4u);
  EXPECT_EQ(next.front(), s.world().draw(5));
}

TEST(Stimulus, ObservationsAreSortedAndInRange) {
  const EdgeWorld w(edge_config(8, 3));
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto obs = w.draw(i);
    EXPECT_TRUE(std::is_sorted(obs.active.begin(), obs.active.end()));
    EXPECT_TRUE(std::adjacent_find(obs.active.begin(), obs.active.end()) == obs.active.end());
    for (NodeId id : obs.active) EXPECT_LT(id, w.n());
  }
}

TEST(Stimulus, DrawIsRasterizedScene) {
  const EdgeWorld w(edge_config(8, 4));
  for (std::uint64_t i = 0; i < 50; ++i) EXPECT_EQ(w.draw(i).active, w.rasterize(w.scene(i)));
}

TEST(Stimulus, FullAnisotropyFavorsHorizontal) {
  auto c = edge_config(8, 5);
  c.anisotropy = 1.0;
  const auto [h, v] = orientation_rates(EdgeWorld(c), 5000);
  EXPECT_GT(h, v);
}

TEST(Stimulus, AnisotropyMonotone) {
  double previous = -1.0;
  for (double a : {0.0, 0.5, 1.0}) {
    auto c = edge_config(8, 6);
    c.anisotropy = a;
    const double h = orientation_rates(EdgeWorld(c), 5000).first;
    EXPECT_GE(h, previous) << "anisotropy " << a;
    previous = h;
  }
}

TEST(Stimulus, IsotropyBalancesOrientations) {
  auto c = edge_config(8, 8);
  c.anisotropy = 0.0;
  const auto [h, v] = orientation_rates(EdgeWorld(c), 20000);
  EXPECT_NEAR(h / v, 1.0, 0.05);
}

TEST(Stimulus, RotationScrambleConstantWithinVideo) {
  auto c = edge_config(8, 9);
  c.anisotropy = 1.0;
  c.rotation_scramble = true;
  c.frames_per_video = 4;
  const EdgeWorld scrambled(c);
  c.rotation_scramble = false;
  const EdgeWorld plain(c);
  // Scrambling balances orientations of an all-horizontal line world.
  const auto [h, v] = orientation_rates(scrambled, 20000);
  const auto [h0, v0] = orientation_rates(plain, 20000);
  EXPECT_GT(h0 / v0, 2.0);
  EXPECT_NEAR(h / v, 1.0, 0.1);
}

TEST(Stimulus, ToroidalTranslationSymmetrizedIsInvariant) {
  // Two-sample test on a 4-node window: draws relabeled by each group generator, and by a
  // composite, against fresh draws.
  auto c = edge_config(8, 10);
  c.toroidal = true;
  c.invariances = {Invariance::translation, Invariance::rotation90};
  const EdgeWorld w(c);
  ASSERT_FALSE(w.symmetrization_group().empty());
  const std::vector<NodeId> window{w.node(0, 3, 3, 0), w.node(0, 4, 3, 0), w.node(0, 3, 4, 1), w.node(0, 4, 4, 1)};
  const auto shift = w.translation(1, 0);
  const auto rot = w.rotation90();
  const std::uint64_t n = 50000;
  for (const auto& tau : {shift, rot, compose(rot, shift)}) {
    std::map<unsigned, double> a, b;
    for (std::uint64_t i = 0; i < n; ++i) {
      ++a[window_state(w.draw(i).active, window)];
      ++b[window_state(tau.apply(w.draw(n + i).active), window)];
    }
    int cells = 0;
    const double chi2 = two_sample_chi2(a, b, n, n, &cells);
    ASSERT_GE(cells, 2);
    EXPECT_LT(chi2, kChi2Crit99[cells - 1]);
  }
}

TEST(Stimulus, HarmonicActiveSetsAreHarmonicStacks) {
  WorldConfig c;
  c.kind = WorldKind::harmonic_audio;
  c.bands = 48;
  c.partials = 4;
  c.partial_decay = 1.0;
  c.seed = 1;
  const HarmonicWorld w(c);
  // Offsets of partials 2..4 on a 12-per-octave axis: round(12 log2 k).
  EXPECT_EQ(w.partial_offset(1), 0);
  EXPECT_EQ(w.partial_offset(2), 12);
  EXPECT_EQ(w.partial_offset(3), 19);
  EXPECT_EQ(w.partial_offset(4), 24);
  for (std::uint64_t i = 0; i < 500; ++i) {
    const int f = w.fundamental(i);
    NodeSet expected;
    for (int s : {0, 12, 19, 24}) {
      if (f + s >= 0 && f + s < 48) expected.push_back(static_cast<NodeId>(f + s));
    }
    EXPECT_EQ(w.draw(i).active, expected);
  }
}

TEST(Stimulus, TableWorldUniformFrequencies) {
  WorldConfig c;
  c.kind = WorldKind::explicit_table;
  c.table = JointDistribution<double>::uniform(3);
  c.seed = 12;
  const auto w = make_world(c);
  std::vector<double> counts(8, 0);
  for (std::uint64_t i = 0; i < 100000; ++i) {
    unsigned s = 0;
    for (NodeId id : w->draw(i).active) s |= 1U << id;
    ++counts[s];
  }
  for (double k : counts) EXPECT_TRUE(oracle::within_binomial_ci(k, 100000, 0.125)) << k;
}

TEST(Stimulus, ShardedAccumulationMatchesSerial) {
  const EdgeWorld w(edge_config(8, 13));
  EXPECT_EQ(accumulate(w, 0, 3000, 1), accumulate(w, 0, 3000, 4));
}

TEST(Stimulus, ConfigErrors) {
  auto c = edge_config(8, 1);
  c.width = 8;
  c.height = 6;
  c.invariances = {Invariance::rotation90};
  EXPECT_THROW(EdgeWorld{c}, ConfigError);
  auto h = edge_config(8, 1);
  h.kind = WorldKind::harmonic_audio;
  h.invariances = {Invariance::rotation90};
  EXPECT_THROW(HarmonicWorld{h}, ConfigError);
  WorldConfig t;
  t.kind = WorldKind::explicit_table;
  EXPECT_THROW(make_world(t), ConfigError);
}

TEST(Stimulus, ContourLabelsCoverDraw) {
  const EdgeWorld w(edge_config(8, 14));
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto scene = w.scene(i);
    NodeSet all;
    for (const auto& part : w.contour_labels(scene)) all.insert(all.end(), part.begin(), part.end());
    normalize(all);
    const auto active = w.rasterize(scene);
    EXPECT_TRUE(std::includes(all.begin(), all.end(), active.begin(), active.end()));
  }
}
