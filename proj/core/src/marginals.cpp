#include "concgraph/marginals.hpp"

#include <algorithm>

namespace concgraph {

JointDistribution<Rational> random_rational_distribution(std::size_t n, Rng& rng, unsigned max_weight) {
  if (n == 0 || n > JointDistribution<Rational>::max_dimension) {
    throw DomainError(fmt::format("random distribution: n={} unsupported", n));
  }
  const std::size_t states = std::size_t{1} << n;
  std::vector<long long> weights(states);
  long long total = 0;
  for (auto& w : weights) {
    w = static_cast<long long>(rng.below(max_weight + 1ULL));
    total += w;
  }
  if (total == 0) {
    weights[rng.below(states)] = 1;
    total = 1;
  }
  std::vector<Rational> table(states);
  for (std::size_t x = 0; x < states; ++x) table[x] = Rational(weights[x], total);
  return JointDistribution<Rational>(n, std::move(table));
}

JointDistribution<double> to_double(const JointDistribution<Rational>& psi) {
  std::vector<double> table(psi.states());
  double sum = 0.0;
  for (std::size_t x = 0; x < table.size(); ++x) {
    table[x] = psi[x].convert_to<double>();
    sum += table[x];
  }
  // Rounding each entry can leave the sum a few ulps from 1.
  for (auto& p : table) p /= sum;
  return JointDistribution<double>(psi.n(), std::move(table));
}

StateSampler::StateSampler(const JointDistribution<double>& psi) : n_(psi.n()), cumulative_(psi.states()) {
  double acc = 0.0;
  for (std::size_t x = 0; x < cumulative_.size(); ++x) {
    acc += psi[x];
    cumulative_[x] = acc;
  }
}

State StateSampler::operator()(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  return static_cast<State>(std::min(idx, cumulative_.size() - 1));
}

}  // namespace concgraph
