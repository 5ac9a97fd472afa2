#include "concgraph/concurrence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

std::string to_string(WeightTransform t) {
  switch (t) {
    case WeightTransform::identity: return "identity";
    case WeightTransform::log1p: return "log1p";
    case WeightTransform::rank: return "rank";
  }
  return "?";
}

WeightTransform parse_weight_transform(const std::string& text) {
  if (text == "identity") return WeightTransform::identity;
  if (text == "log1p") return WeightTransform::log1p;
  if (text == "rank") return WeightTransform::rank;
  throw ConfigError(fmt::format("unknown weight transform '{}'", text));
}

ConcurrenceGraph::ConcurrenceGraph(std::size_t n, WeightTransform transform)
    : n_(n), transform_(transform), node_counts_(n, 0), pair_counts_(n < 2 ? 0 : n * (n - 1) / 2, 0) {}

ConcurrenceGraph ConcurrenceGraph::from_counts(std::size_t n, std::uint64_t total, std::vector<std::uint64_t> node_counts,
                                               std::vector<std::uint64_t> pair_counts, WeightTransform transform) {
  ConcurrenceGraph g(n, transform);
  if (node_counts.size() != n || pair_counts.size() != g.pair_counts_.size()) {
    throw DomainError("concurrence graph: stored count arrays do not match n");
  }
  g.total_ = total;
  g.node_counts_ = std::move(node_counts);
  g.pair_counts_ = std::move(pair_counts);
  for (NodeId u = 0; u < n; ++u) {
    if (g.node_counts_[u] > total) throw DomainError("concurrence graph: node count exceeds N");
    for (NodeId v = u + 1; v < n; ++v) {
      if (g.count(u, v) > std::min(g.node_counts_[u], g.node_counts_[v])) {
        throw DomainError(fmt::format("concurrence graph: c_{}{} exceeds a node count", u, v));
      }
    }
  }
  return g;
}

std::uint64_t ConcurrenceGraph::count(NodeId u, NodeId v) const {
  if (u >= n_ || v >= n_) throw DomainError("concurrence graph: node out of range");
  if (u == v) throw DomainError("concurrence graph: self pairs are not counted");
  if (u > v) std::swap(u, v);
  return pair_counts_[packed_index(u, v)];
}

void ConcurrenceGraph::record(const Observation& obs) { record(obs, 1); }

void ConcurrenceGraph::record(const Observation& obs, std::uint64_t multiplicity) {
  for (NodeId k : obs.active) {
    if (k >= n_) throw DomainError(fmt::format("record: index {} out of range (n={})", k, n_));
  }
  NodeSet copy;
  const NodeSet* active = &obs.active;
  if (!std::is_sorted(obs.active.begin(), obs.active.end()) ||
      std::adjacent_find(obs.active.begin(), obs.active.end()) != obs.active.end()) {
    copy = obs.active;
    normalize(copy);
    active = &copy;
  }
  const auto& a = *active;
  for (std::size_t i = 0; i < a.size(); ++i) {
    node_counts_[a[i]] += multiplicity;
    for (std::size_t j = i + 1; j < a.size(); ++j) pair_counts_[packed_index(a[i], a[j])] += multiplicity;
  }
  total_ += multiplicity;
}

void ConcurrenceGraph::record(std::span<const Observation> stream) {
  for (const auto& obs : stream) record(obs);
}

void ConcurrenceGraph::merge(const ConcurrenceGraph& other) {
  if (other.n_ != n_) throw DomainError("merge: node counts differ");
  total_ += other.total_;
  for (std::size_t i = 0; i < n_; ++i) node_counts_[i] += other.node_counts_[i];
  for (std::size_t i = 0; i < pair_counts_.size(); ++i) pair_counts_[i] += other.pair_counts_[i];
}

std::vector<WeightedEdge> ConcurrenceGraph::weights() const {
  if (total_ == 0) throw DomainError("weights: empty graph (N = 0)");
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < n_; ++u) {
    for (NodeId v = u + 1; v < n_; ++v) {
      const std::uint64_t c = pair_counts_[packed_index(u, v)];
      if (c > 0) edges.push_back(WeightedEdge{u, v, c, 0.0});
    }
  }
  const double total = static_cast<double>(total_);
  switch (transform_) {
    case WeightTransform::identity:
      for (auto& e : edges) e.weight = static_cast<double>(e.count) / total;
      break;
    case WeightTransform::log1p:
      for (auto& e : edges) e.weight = std::log1p(static_cast<double>(e.count) / total);
      break;
    case WeightTransform::rank: {
      std::vector<std::uint64_t> sorted(edges.size());
      std::transform(edges.begin(), edges.end(), sorted.begin(), [](const WeightedEdge& e) { return e.count; });
      std::sort(sorted.begin(), sorted.end());
      const double e_total = static_cast<double>(edges.size());
      for (auto& e : edges) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), e.count) - sorted.begin();
        e.weight = static_cast<double>(below + 1) / e_total;
      }
      break;
    }
  }
  return edges;
}

std::vector<double> ConcurrenceGraph::weight_matrix() const {
  std::vector<double> w(n_ * n_, 0.0);
  for (const auto& e : weights()) {
    w[e.u * n_ + e.v] = e.weight;
    w[e.v * n_ + e.u] = e.weight;
  }
  return w;
}

HomogeneityReport ConcurrenceGraph::marginal_homogeneity(double tolerance) const {
  if (total_ == 0) throw DomainError("marginal_homogeneity: empty graph (N = 0)");
  HomogeneityReport r;
  r.tolerance = tolerance;
  const double total = static_cast<double>(total_);
  double sum = 0.0;
  for (auto c : node_counts_) sum += static_cast<double>(c) / total;
  r.mean_rate = n_ ? sum / static_cast<double>(n_) : 0.0;
  for (NodeId k = 0; k < n_; ++k) {
    const double dev = std::abs(static_cast<double>(node_counts_[k]) / total - r.mean_rate);
    if (dev > r.max_deviation) {
      r.max_deviation = dev;
      r.worst_node = k;
    }
  }
  r.homogeneous = r.max_deviation <= tolerance;
  return r;
}

ConcurrenceGraph accumulate(const World& world, std::uint64_t begin, std::uint64_t count, unsigned shards,
                            WeightTransform transform) {
  shards = std::max(1U, shards);
  std::vector<ConcurrenceGraph> partial(shards, ConcurrenceGraph(world.n(), transform));
  auto work = [&](unsigned s) {
    const std::uint64_t lo = begin + count * s / shards;
    const std::uint64_t hi = begin + count * (s + 1) / shards;
    for (std::uint64_t i = lo; i < hi; ++i) partial[s].record(world.draw(i));
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned s = 0; s < shards; ++s) threads.emplace_back(work, s);
  }
  ConcurrenceGraph out(world.n(), transform);
  for (const auto& g : partial) out.merge(g);
  return out;
}

}  // namespace concgraph
