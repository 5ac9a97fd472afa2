#include <gtest/gtest.h>

#include "concgraph/appendix.hpp"
#include "concgraph/marginals.hpp"
#include "oracles.hpp"

using namespace concgraph;

namespace {

JointDistribution<Rational> random_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return random_rational_distribution(n, rng);
}

}  // namespace

TEST(Marginals, UniformSingleCoordinate) {
  const auto psi = JointDistribution<double>::uniform(2);
  const auto m = project(psi, IndexSet({0}));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[0], 0.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
}

TEST(Marginals, PerfectlyCorrelatedPair) {
  const JointDistribution<double> psi(2, {0.5, 0.0, 0.0, 0.5});
  const auto m = project(psi, IndexSet({0, 1}));
  EXPECT_DOUBLE_EQ(m[0b11], 0.5);
  EXPECT_DOUBLE_EQ(m[0b00], 0.5);
  EXPECT_DOUBLE_EQ(m[0b01], 0.0);
  EXPECT_DOUBLE_EQ(m[0b10], 0.0);
}

TEST(Marginals, AllPairsMatchBruteForceRational) {
  const auto psi = random_table(6, 21);
  std::size_t pairs = 0;
  for (unsigned a = 0; a < 6; ++a) {
    for (unsigned b = a + 1; b < 6; ++b) {
      const auto m = project(psi, IndexSet({a, b}));
      const auto ref = oracle::brute_marginal(psi, {a, b});
      for (const auto& [key, p] : ref) {
        const std::size_t idx = static_cast<std::size_t>(key[0]) | (static_cast<std::size_t>(key[1]) << 1);
        EXPECT_EQ(m[idx], p);
      }
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 15u);
}

TEST(Marginals, ProjectionIsLinear) {
  const auto p1 = random_table(5, 1);
  const auto p2 = random_table(5, 2);
  const Rational alpha(3, 7);
  std::vector<Rational> mix(p1.states());
  for (State x = 0; x < p1.states(); ++x) mix[x] = alpha * p1[x] + (1 - alpha) * p2[x];
  const JointDistribution<Rational> psi(5, mix);
  const IndexSet mu({1, 3, 4});
  const auto lhs = project(psi, mu);
  const auto r1 = project(p1, mu);
  const auto r2 = project(p2, mu);
  for (std::size_t k = 0; k < lhs.size(); ++k) EXPECT_EQ(lhs[k], alpha * r1[k] + (1 - alpha) * r2[k]);
}

TEST(Marginals, ProjectionIsConsistent) {
  // Projecting to mu then to nu inside mu equals projecting straight to nu.
  const auto psi = random_table(6, 5);
  const auto via = project(psi, IndexSet({0, 2, 5}));  // bits: 0->x0, 1->x2, 2->x5
  const JointDistribution<Rational> inner(3, via);
  const auto two_step = project(inner, IndexSet({0, 2}));  // x0, x5
  const auto direct = project(psi, IndexSet({0, 5}));
  EXPECT_EQ(two_step, direct);
}

TEST(Marginals, IndexSetValidation) {
  EXPECT_THROW(IndexSet({}), DomainError);
  EXPECT_THROW(IndexSet({2, 1}), DomainError);
  EXPECT_THROW(IndexSet({1, 1}), DomainError);
  const auto psi = JointDistribution<double>::uniform(3);
  EXPECT_THROW(project(psi, IndexSet({0, 3})), DomainError);
}

TEST(Marginals, TableValidation) {
  EXPECT_THROW(JointDistribution<double>(2, {0.5, 0.5}), DomainError);
  EXPECT_THROW(JointDistribution<double>(1, {0.7, 0.7}), DomainError);
  EXPECT_THROW(JointDistribution<double>(1, {1.5, -0.5}), DomainError);
  EXPECT_THROW(JointDistribution<Rational>(13, {}), DomainError);
}

TEST(Marginals, IdentityIsAlwaysInvariant) {
  const auto psi = random_table(5, 8);
  EXPECT_TRUE(is_invariant(psi, Permutation::identity(5), Rational(0)));
}

TEST(Marginals, ConcentratedStateBreaksSwap) {
  std::vector<Rational> t(8, Rational(0));
  t[0b001] = 1;  // x = (1, 0, 0)
  const JointDistribution<Rational> psi(3, t);
  EXPECT_FALSE(is_invariant(psi, Permutation({1, 0, 2}), Rational(0)));
}

TEST(Marginals, SymmetrizedIsInvariantUnderEveryElement) {
  const auto psi = random_table(6, 13);
  const std::vector<Permutation> gens{Permutation({1, 2, 0, 4, 5, 3}), Permutation({3, 4, 5, 0, 1, 2})};
  const auto group = generate_group(gens);
  const auto sym = symmetrize(psi, group.elements);
  for (const auto& g : group.elements) EXPECT_TRUE(is_invariant(sym, g, Rational(0)));
}

TEST(Marginals, InheritanceHoldsForCyclicSymmetrization) {
  const auto tau = Permutation::cycle(6);
  const auto group = generate_group(std::vector<Permutation>{tau});
  const auto psi = symmetrize(random_table(6, 34), group.elements);
  const auto r = verify_inheritance(psi, tau, 2);
  EXPECT_TRUE(r.invariant);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.subsets_checked, 15u);
  EXPECT_EQ(r.max_discrepancy, Rational(0));
  EXPECT_FALSE(r.counterexample.has_value());
}

TEST(Marginals, InheritanceIndependentCheck) {
  // Same identity checked through the brute-force marginal oracle.
  const auto tau = Permutation::cycle(5);
  const auto psi = symmetrize(random_table(5, 3), generate_group(std::vector<Permutation>{tau}).elements);
  for (unsigned a = 0; a < 5; ++a) {
    for (unsigned b = a + 1; b < 5; ++b) {
      const auto lhs = oracle::brute_marginal(psi, {tau[a], tau[b]});
      const auto rhs = oracle::brute_marginal(psi, {a, b});
      EXPECT_EQ(lhs, rhs);
    }
  }
}

TEST(Marginals, FullOrderMarginalIsRelabeledTable) {
  const auto tau = Permutation::cycle(4);
  const auto psi = symmetrize(random_table(4, 77), generate_group(std::vector<Permutation>{tau}).elements);
  const auto r = verify_inheritance(psi, tau, 4);
  EXPECT_EQ(r.subsets_checked, 1u);
  EXPECT_TRUE(r.holds);
}

TEST(Marginals, NonInvariantTableReportsCounterexample) {
  const auto ex = converse_example();
  EXPECT_TRUE(ex.singles_equal);
  EXPECT_FALSE(ex.pairs.invariant);
  EXPECT_FALSE(ex.pairs.holds);
  ASSERT_TRUE(ex.pairs.counterexample.has_value());
  // Independent check: P(x0 = x1 = 1) = 1/2 but P(x1 = x2 = 1) = 1/4.
  EXPECT_EQ(oracle::brute_pair_on(ex.psi, 0, 1), Rational(1, 2));
  EXPECT_EQ(oracle::brute_pair_on(ex.psi, 1, 2), Rational(1, 4));
}

TEST(Marginals, PairwiseTruthIndependentBernoulli) {
  const double p = 0.3;
  std::vector<double> t(16);
  for (State x = 0; x < 16; ++x) {
    const int ones = __builtin_popcountll(x);
    t[x] = std::pow(p, ones) * std::pow(1 - p, 4 - ones);
  }
  const JointDistribution<double> psi(4, t);
  const auto m = pairwise_truth(psi);
  for (int a = 0; a < 4; ++a) {
    EXPECT_NEAR(m[a][a], p, 1e-12);
    for (int b = 0; b < 4; ++b) {
      if (a != b) EXPECT_NEAR(m[a][b], p * p, 1e-12);
    }
  }
}

TEST(Marginals, PairwiseTruthMatchesBruteForce) {
  const auto psi = random_table(4, 99);
  const auto m = pairwise_truth(psi);
  for (unsigned a = 0; a < 4; ++a) {
    for (unsigned b = 0; b < 4; ++b) {
      if (a != b) EXPECT_EQ(m[a][b], oracle::brute_pair_on(psi, a, b));
    }
  }
  const JointDistribution<double> both(2, {0.5, 0.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(pairwise_truth(both)[0][1], 0.5);
}

TEST(Marginals, AppendixTrialsAllHold) {
  const auto r = verify_appendix(30, 4);
  EXPECT_EQ(r.trials.size(), 30u);
  EXPECT_EQ(r.failures(), 0u);
  for (const auto& t : r.trials) {
    EXPECT_TRUE(t.invariant);
    EXPECT_GE(t.n, 4u);
    EXPECT_LE(t.n, 8u);
    EXPECT_FALSE(t.tau.is_identity());
  }
}

TEST(Marginals, StateSamplerFrequencies) {
  // Multinomial check: each of 8 states within 3 sigma of 1/8 at 1e5 draws.
  const auto psi = JointDistribution<double>::uniform(3);
  const StateSampler sampler(psi);
  std::vector<double> counts(8, 0);
  for (std::uint64_t i = 0; i < 100000; ++i) {
    Rng rng = Rng::for_draw(2, i);
    ++counts[sampler(rng)];
  }
  for (double c : counts) EXPECT_TRUE(oracle::within_binomial_ci(c, 100000, 0.125, 3.5)) << c;
}
