#pragma once

// Exact small-n probability tables over {0,1}^n.
//
// State convention: a state is an unsigned integer bitmask, bit i holds coordinate x_i.
// Marginal tables use the same convention over the selected coordinates: bit j of a
// marginal index is the value of the j-th listed coordinate.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "concgraph/error.hpp"
#include "concgraph/permutation.hpp"
#include "concgraph/rng.hpp"

namespace concgraph {

using Rational = boost::multiprecision::cpp_rational;
using State = std::uint64_t;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

template <class T>
T abs_diff(const T& a, const T& b) {
  if constexpr (is_exact_v<T>) {
    return boost::multiprecision::abs(a - b);
  } else {
    return std::abs(a - b);
  }
}

/// Tolerance used for normalization and inheritance checks: exact in rational mode.
template <class T>
T default_tolerance() {
  if constexpr (is_exact_v<T>) {
    return T(0);
  } else {
    return T(1e-12);
  }
}

template <class T>
class JointDistribution {
 public:
  static constexpr std::size_t max_dimension = is_exact_v<T> ? 12 : 20;

  JointDistribution(std::size_t n, std::vector<T> table) : n_(n), table_(std::move(table)) {
    if (n_ == 0 || n_ > max_dimension) {
      throw DomainError(fmt::format("joint distribution: n={} outside 1..{}", n_, max_dimension));
    }
    if (table_.size() != (std::size_t{1} << n_)) {
      throw DomainError(fmt::format("joint distribution: table has {} entries, expected 2^{}", table_.size(), n_));
    }
    T sum(0);
    for (const T& p : table_) {
      if (p < T(0)) throw DomainError("joint distribution: negative probability");
      sum += p;
    }
    if (abs_diff(sum, T(1)) > default_tolerance<T>()) {
      throw DomainError("joint distribution: probabilities do not sum to 1");
    }
  }

  static JointDistribution uniform(std::size_t n) {
    const std::size_t states = std::size_t{1} << n;
    return JointDistribution(n, std::vector<T>(states, T(1) / T(static_cast<long long>(states))));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t states() const noexcept { return table_.size(); }
  const T& operator[](State x) const { return table_[x]; }
  std::span<const T> table() const noexcept { return table_; }

 private:
  std::size_t n_;
  std::vector<T> table_;
};

/// Sorted, distinct, nonempty coordinate subset.
class IndexSet {
 public:
  explicit IndexSet(std::vector<NodeId> indices) : indices_(std::move(indices)) {
    if (indices_.empty()) throw DomainError("index set: empty");
    for (std::size_t i = 1; i < indices_.size(); ++i) {
      if (indices_[i] <= indices_[i - 1]) throw DomainError("index set: indices must be sorted and distinct");
    }
  }
  std::span<const NodeId> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }

 private:
  std::vector<NodeId> indices_;
};

/// Marginal over an ordered coordinate list (order defines the marginal's bit layout).
template <class T>
std::vector<T> project_ordered(const JointDistribution<T>& psi, std::span<const NodeId> coords) {
  if (coords.empty()) throw DomainError("project: empty index set");
  for (NodeId c : coords) {
    if (c >= psi.n()) throw DomainError(fmt::format("project: coordinate {} out of range (n={})", c, psi.n()));
  }
  std::vector<T> out(std::size_t{1} << coords.size(), T(0));
  for (State x = 0; x < psi.states(); ++x) {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < coords.size(); ++j) idx |= static_cast<std::size_t>((x >> coords[j]) & 1U) << j;
    out[idx] += psi[x];
  }
  return out;
}

template <class T>
std::vector<T> project(const JointDistribution<T>& psi, const IndexSet& mu) {
  return project_ordered(psi, mu.indices());
}

/// y with y_i = x_{tau(i)}.
inline State permute_state(State x, const Permutation& tau) {
  State y = 0;
  for (NodeId i = 0; i < tau.size(); ++i) y |= ((x >> tau[i]) & State{1}) << i;
  return y;
}

/// First state x with |psi(x) - psi(x o tau)| > tolerance, if any.
template <class T>
std::optional<State> invariance_violation(const JointDistribution<T>& psi, const Permutation& tau, const T& tolerance) {
  if (tau.size() != psi.n()) {
    throw DomainError(fmt::format("is_invariant: permutation size {} != n={}", tau.size(), psi.n()));
  }
  for (State x = 0; x < psi.states(); ++x) {
    if (abs_diff(psi[x], psi[permute_state(x, tau)]) > tolerance) return x;
  }
  return std::nullopt;
}

template <class T>
bool is_invariant(const JointDistribution<T>& psi, const Permutation& tau, const T& tolerance) {
  return !invariance_violation(psi, tau, tolerance).has_value();
}

template <class T>
struct InheritanceReport {
  bool invariant = false;
  std::optional<State> breaking_state;          // set when psi is not invariant under tau
  std::size_t subsets_checked = 0;
  T max_discrepancy = T(0);
  std::optional<std::vector<NodeId>> counterexample;  // first mu whose marginal differs from tau(mu)'s
  bool holds = false;                           // max_discrepancy within tolerance over every mu
};

/// Calls `fn(mu)` for every m-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t m, Fn&& fn) {
  if (m == 0 || m > n) return;
  std::vector<NodeId> mu(m);
  for (std::size_t i = 0; i < m; ++i) mu[i] = static_cast<NodeId>(i);
  while (true) {
    fn(std::span<const NodeId>(mu));
    std::size_t i = m;
    while (i > 0 && mu[i - 1] == n - m + (i - 1)) --i;
    if (i == 0) return;
    ++mu[i - 1];
    for (std::size_t j = i; j < m; ++j) mu[j] = mu[j - 1] + 1;
  }
}

/// Checks psi_{tau(mu)}(v) = psi_mu(v) for every m-subset mu, where the left marginal is
/// taken over the ordered list (tau(mu_1), ..., tau(mu_m)).
template <class T>
InheritanceReport<T> verify_inheritance(const JointDistribution<T>& psi, const Permutation& tau, std::size_t m) {
  if (m == 0 || m > psi.n()) throw DomainError(fmt::format("verify_inheritance: m={} outside 1..{}", m, psi.n()));
  InheritanceReport<T> report;
  report.breaking_state = invariance_violation(psi, tau, T(0));
  report.invariant = !report.breaking_state.has_value();
  const T tolerance = default_tolerance<T>();
  std::vector<NodeId> image(m);
  for_each_subset(psi.n(), m, [&](std::span<const NodeId> mu) {
    for (std::size_t j = 0; j < m; ++j) image[j] = tau[mu[j]];
    const auto lhs = project_ordered(psi, image);
    const auto rhs = project_ordered(psi, mu);
    T worst(0);
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      const T d = abs_diff(lhs[k], rhs[k]);
      if (d > worst) worst = d;
    }
    if (worst > report.max_discrepancy) report.max_discrepancy = worst;
    if (worst > tolerance && !report.counterexample) report.counterexample = std::vector<NodeId>(mu.begin(), mu.end());
    ++report.subsets_checked;
  });
  report.holds = report.max_discrepancy <= tolerance;
  return report;
}

/// n x n matrix of P(x_k = 1, x_m = 1); the diagonal holds P(x_k = 1).
template <class T>
std::vector<std::vector<T>> pairwise_truth(const JointDistribution<T>& psi) {
  const std::size_t n = psi.n();
  std::vector<std::vector<T>> out(n, std::vector<T>(n, T(0)));
  for (State x = 0; x < psi.states(); ++x) {
    if (psi[x] == T(0)) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (!((x >> k) & 1U)) continue;
      for (std::size_t m = k; m < n; ++m) {
        if ((x >> m) & 1U) out[k][m] += psi[x];
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t m = 0; m < k; ++m) out[k][m] = out[m][k];
  }
  return out;
}

/// Average of psi over the relabelings by every element of `group`. The result is
/// invariant under each element when `group` is closed under composition.
template <class T>
JointDistribution<T> symmetrize(const JointDistribution<T>& psi, std::span<const Permutation> group) {
  if (group.empty()) return psi;
  std::vector<T> table(psi.states(), T(0));
  for (const auto& g : group) {
    if (g.size() != psi.n()) throw DomainError("symmetrize: permutation size mismatch");
    for (State x = 0; x < psi.states(); ++x) table[x] += psi[permute_state(x, g)];
  }
  const T count(static_cast<long long>(group.size()));
  for (auto& p : table) p /= count;
  return JointDistribution<T>(psi.n(), std::move(table));
}

/// Random table with integer weights in [0, max_weight], normalized exactly.
JointDistribution<Rational> random_rational_distribution(std::size_t n, Rng& rng, unsigned max_weight = 9);

JointDistribution<double> to_double(const JointDistribution<Rational>& psi);

/// Samples one state by inversion of the cumulative table.
class StateSampler {
 public:
  explicit StateSampler(const JointDistribution<double>& psi);
  State operator()(Rng& rng) const;
  std::size_t n() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;
};

}  // namespace concgraph
