#pragma once
// Independent reference implementations used as test oracles. Nothing here calls the
// library code it is checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "concgraph/marginals.hpp"
#include "concgraph/rng.hpp"
#include "concgraph/stimulus.hpp"

namespace oracle {

using concgraph::Rational;

/// Marginal by enumerating every state and testing each listed coordinate bit.
template <class T>
std::map<std::vector<int>, T> brute_marginal(const concgraph::JointDistribution<T>& psi, const std::vector<unsigned>& coords) {
  std::map<std::vector<int>, T> out;
  const std::size_t n = psi.n();
  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) {
    std::vector<int> key;
    for (unsigned c : coords) key.push_back(static_cast<int>((x / (std::size_t{1} << c)) % 2));
    auto [it, inserted] = out.emplace(key, T(0));
    it->second += psi[x];
  }
  return out;
}

/// P(x_a = 1 and x_b = 1) by enumeration.
template <class T>
T brute_pair_on(const concgraph::JointDistribution<T>& psi, unsigned a, unsigned b) {
  T sum(0);
  for (std::size_t x = 0; x < psi.states(); ++x) {
    const bool xa = (x / (std::size_t{1} << a)) % 2 == 1;
    const bool xb = (x / (std::size_t{1} << b)) % 2 == 1;
    if (xa && xb) sum += psi[x];
  }
  return sum;
}

/// Dense symmetric count matrix.
struct DenseGraph {
  std::size_t n = 0;
  std::vector<std::uint64_t> c;
  std::uint64_t at(std::size_t u, std::size_t v) const { return c[u * n + v]; }
};

/// Pair counts by looping over all ordered pairs of each observation.
inline DenseGraph count_pairs(std::size_t n, const std::vector<concgraph::Observation>& stream) {
  DenseGraph g{n, std::vector<std::uint64_t>(n * n, 0)};
  for (const auto& obs : stream) {
    for (auto u : obs.active) {
      for (auto v : obs.active) {
        if (u != v) ++g.c[u * n + v];
      }
    }
  }
  return g;
}

/// Every permutation of {0..n-1} preserving all pair weights, by std::next_permutation.
inline std::set<std::vector<std::uint32_t>> brute_automorphisms(const DenseGraph& g) {
  std::set<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> p(g.n);
  std::iota(p.begin(), p.end(), 0u);
  do {
    bool ok = true;
    for (std::size_t u = 0; u < g.n && ok; ++u) {
      for (std::size_t v = 0; v < g.n; ++v) {
        if (u != v && g.at(u, v) != g.at(p[u], p[v])) {
          ok = false;
          break;
        }
      }
    }
    if (ok) out.insert(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Plain Lloyd k-means with unit-normalized centroids, seeded from the given points.
inline std::vector<std::vector<double>> spherical_kmeans(const std::vector<std::vector<double>>& points,
                                                         std::vector<std::vector<double>> centers, int iterations) {
  auto normalize = [](std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s > 0) {
      for (double& x : v) x /= s;
    }
  };
  for (auto& c : centers) normalize(c);
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<double>> sum(centers.size(), std::vector<double>(centers[0].size(), 0.0));
    for (const auto& p : points) {
      std::size_t best = 0;
      double best_dot = -1e300;
      for (std::size_t k = 0; k < centers.size(); ++k) {
        double d = 0;
        for (std::size_t i = 0; i < p.size(); ++i) d += p[i] * centers[k][i];
        if (d > best_dot) {
          best_dot = d;
          best = k;
        }
      }
      for (std::size_t i = 0; i < p.size(); ++i) sum[best][i] += p[i];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (std::any_of(sum[k].begin(), sum[k].end(), [](double x) { return x != 0.0; })) {
        normalize(sum[k]);
        centers[k] = sum[k];
      }
    }
  }
  return centers;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// |p_hat - p| <= z * sqrt(p (1 - p) / N).
inline bool within_binomial_ci(double count, double total, double p, double z = 3.0) {
  return std::abs(count / total - p) <= z * std::sqrt(p * (1.0 - p) / total);
}

}  // namespace oracle
