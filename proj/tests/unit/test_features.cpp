#include <gtest/gtest.h>

#include <cmath>

#include "concgraph/error.hpp"
#include "concgraph/features.hpp"
#include "oracles.hpp"

using namespace concgraph;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> noisy(const std::vector<double>& center, Rng& rng, double amplitude) {
  std::vector<double> v = center;
  for (double& x : v) x = std::max(0.0, x + amplitude * (rng.uniform() - 0.5));
  return v;
}

}  // namespace

TEST(Features, SingleDetectorConvergesToInput) {
  DetectorBank bank({Detector{{1.0, 0.0, 0.0}, {}}}, 0.05, BankMode::learned);
  const std::vector<double> input{1.0, 2.0, 2.0};
  for (int i = 0; i < 1000; ++i) bank.train_step(input);
  const auto& w = bank.detector(0).weights;
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(w[2], 2.0 / 3.0, 1e-6);
}

TEST(Features, TieGoesToLowerIndex) {
  const DetectorBank bank({Detector{{1.0, 1.0}, {}}, Detector{{1.0, 1.0}, {}}}, 0.1, BankMode::learned);
  EXPECT_EQ(bank.winner(std::vector<double>{0.3, 0.7}), 0u);
}

TEST(Features, TrainStepKeepsUnitNormAndChangesOnlyWinner) {
  Rng rng(3);
  std::vector<Detector> ds;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> w(8);
    for (double& x : w) x = rng.uniform();
    ds.push_back(Detector{w, {}});
  }
  DetectorBank bank(ds, 0.2, BankMode::learned);
  for (int step = 0; step < 200; ++step) {
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform();
    const DetectorBank before = bank;
    const auto win = bank.train_step(x);
    for (std::size_t k = 0; k < bank.size(); ++k) {
      EXPECT_NEAR(norm(bank.detector(k).weights), 1.0, 1e-12);
      if (k != win) EXPECT_EQ(bank.detector(k).weights, before.detector(k).weights);
    }
  }
}

TEST(Features, ZeroInputIsNoOp) {
  DetectorBank bank({Detector{{1.0, 0.0}, {}}}, 0.1, BankMode::learned);
  EXPECT_EQ(bank.train_step(std::vector<double>{0.0, 0.0}), DetectorBank::no_winner);
  EXPECT_EQ(bank.zero_inputs(), 1u);
  EXPECT_TRUE(activate(bank, std::vector<double>{0.0, 0.0}, 0.5).active.empty());
}

TEST(Features, RejectsBadShapes) {
  EXPECT_THROW(DetectorBank({Detector{{1.0, 0.0}, {}}, Detector{{1.0}, {}}}, 0.1, BankMode::learned), DomainError);
  EXPECT_THROW(DetectorBank({Detector{{0.0, 0.0}, {}}}, 0.1, BankMode::learned), DomainError);
  const DetectorBank bank({Detector{{1.0, 0.0}, {}}}, 0.1, BankMode::learned);
  EXPECT_THROW(bank.winner(std::vector<double>{1.0}), DomainError);
  EXPECT_THROW(activate(bank, std::vector<double>{1.0, 0.0}, 0.0), DomainError);
}

TEST(Features, ThresholdOneSelectsMatchingDetector) {
  const DetectorBank bank({Detector{{1.0, 0.0, 0.0}, {}}, Detector{{0.0, 3.0, 4.0}, {}}, Detector{{0.0, 0.6, 0.8}, {}},
                           Detector{{0.0, 1.0, 0.0}, {}}},
                          0.1, BankMode::learned);
  const std::vector<double> input{0.0, 0.6, 0.8};
  EXPECT_EQ(activate(bank, input, 1.0).active, (NodeSet{1, 2}));  // 1 and 2 are exact duplicates
}

TEST(Features, TwoClustersMatchKMeans) {
  // Competitive learning on two separated clusters ends near the k-means centroids.
  Rng rng(21);
  const std::vector<double> c1{1.0, 1.0, 0.0, 0.0, 0.1, 0.0};
  const std::vector<double> c2{0.0, 0.0, 1.0, 1.0, 0.0, 0.1};
  std::vector<std::vector<double>> points;
  for (int i = 0; i < 2000; ++i) points.push_back(noisy(i % 2 ? c1 : c2, rng, 0.3));
  Rng init(1);
  DetectorBank bank = DetectorBank::from_samples(points, 2, 0.01, init);
  for (int step = 0; step < 10000; ++step) bank.train_step(points[rng.below(points.size())]);

  const auto centers = oracle::spherical_kmeans(points, {points[0], points[1]}, 50);
  std::vector<bool> taken(2, false);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& w = bank.detector(k).weights;
    const std::size_t j = oracle::cosine(w, centers[0]) > oracle::cosine(w, centers[1]) ? 0 : 1;
    EXPECT_FALSE(taken[j]) << "two detectors on one cluster";
    taken[j] = true;
    EXPECT_LT(1.0 - oracle::cosine(w, centers[j]), 0.1);
  }
}

TEST(Features, PermutationEquivariance) {
  // Relabeling input dimensions and initial weights by pi relabels the trajectory.
  Rng rng(4);
  const std::size_t d = 6;
  const Permutation pi({3, 0, 5, 1, 4, 2});
  auto permute = [&](const std::vector<double>& v) {
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[pi[static_cast<NodeId>(i)]] = v[i];
    return out;
  };
  std::vector<Detector> a, b;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> w(d);
    for (double& x : w) x = rng.uniform() + 0.1;
    a.push_back(Detector{w, {}});
    b.push_back(Detector{permute(w), {}});
  }
  DetectorBank ba(a, 0.1, BankMode::learned), bb(b, 0.1, BankMode::learned);
  for (int step = 0; step < 300; ++step) {
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform();
    EXPECT_EQ(ba.train_step(x), bb.train_step(permute(x)));
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const auto expected = permute(ba.detector(k).weights);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(bb.detector(k).weights[i], expected[i], 1e-12);
  }
}

TEST(Features, PredefinedBankReproducesOverlapRule) {
  WorldConfig c;
  c.width = c.height = 8;
  c.seed = 31;
  const EdgeWorld w(c);
  const auto bank = DetectorBank::predefined_edge_bank(w);
  ASSERT_EQ(bank.size(), w.n());
  EXPECT_EQ(bank.mode(), BankMode::predefined);
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto scene = w.scene(i);
    EXPECT_EQ(activate(bank, w.render(scene), 0.5).active, w.rasterize(scene)) << "draw " << i;
  }
}

TEST(Features, FromSamplesSkipsZeroRows) {
  const std::vector<std::vector<double>> samples{{0, 0}, {1, 0}, {0, 0}, {0, 1}};
  Rng rng(2);
  const auto bank = DetectorBank::from_samples(samples, 2, 0.1, rng);
  for (const auto& d : bank.detectors()) EXPECT_NEAR(norm(d.weights), 1.0, 1e-12);
  EXPECT_NE(bank.detector(0).weights, bank.detector(1).weights);
  Rng r2(2);
  EXPECT_THROW(DetectorBank::from_samples(samples, 3, 0.1, r2), DomainError);
}
