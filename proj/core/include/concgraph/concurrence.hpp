#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "concgraph/stimulus.hpp"

namespace concgraph {

/// Strictly increasing map applied to co-activation frequencies c_km / N.
/// `rank` assigns competition ranks (ties share the lowest rank) divided by the edge count.
enum class WeightTransform { identity, log1p, rank };

std::string to_string(WeightTransform t);
WeightTransform parse_weight_transform(const std::string& text);

struct WeightedEdge {
  NodeId u = 0;
  NodeId v = 0;
  std::uint64_t count = 0;
  double weight = 0.0;
};

struct HomogeneityReport {
  double mean_rate = 0.0;
  double max_deviation = 0.0;
  NodeId worst_node = 0;
  double tolerance = 0.0;
  /// True when every node rate c_k/N lies within `tolerance` of the mean, i.e. one number
  /// per pair suffices to describe the pairwise marginals.
  bool homogeneous = false;
};

/// Co-activation counts over an observation stream. Counts are exact integers; weights are
/// derived on demand. Pairs with zero count are absent edges.
class ConcurrenceGraph {
 public:
  explicit ConcurrenceGraph(std::size_t n, WeightTransform transform = WeightTransform::identity);

  /// Restores a graph from stored counts (pair counts in packed upper-triangular order).
  static ConcurrenceGraph from_counts(std::size_t n, std::uint64_t total, std::vector<std::uint64_t> node_counts,
                                      std::vector<std::uint64_t> pair_counts, WeightTransform transform);

  std::size_t n() const noexcept { return n_; }
  std::uint64_t total() const noexcept { return total_; }
  WeightTransform transform() const noexcept { return transform_; }
  void set_transform(WeightTransform t) noexcept { transform_ = t; }

  std::uint64_t node_count(NodeId k) const { return node_counts_.at(k); }
  /// c_uv for u != v (symmetric).
  std::uint64_t count(NodeId u, NodeId v) const;
  std::span<const std::uint64_t> node_counts() const noexcept { return node_counts_; }
  std::span<const std::uint64_t> packed_pair_counts() const noexcept { return pair_counts_; }

  /// Adds one observation. Out-of-range indices leave the graph unchanged and throw DomainError.
  void record(const Observation& obs);
  void record(std::span<const Observation> stream);
  /// Records `obs` as if it had been drawn `multiplicity` times (bootstrap resampling).
  void record(const Observation& obs, std::uint64_t multiplicity);

  /// Count addition. Both graphs must have the same node count.
  void merge(const ConcurrenceGraph& other);

  /// Edges with c_uv > 0 in (u, v) lexicographic order, weight f(c_uv / N).
  /// Throws DomainError when N = 0.
  std::vector<WeightedEdge> weights() const;

  /// Dense n x n weights (0 on the diagonal and for absent edges).
  std::vector<double> weight_matrix() const;

  HomogeneityReport marginal_homogeneity(double tolerance) const;

  friend bool operator==(const ConcurrenceGraph& a, const ConcurrenceGraph& b) {
    return a.n_ == b.n_ && a.total_ == b.total_ && a.node_counts_ == b.node_counts_ && a.pair_counts_ == b.pair_counts_;
  }

  /// Position of pair (u, v), u < v, in packed_pair_counts().
  std::size_t packed_index(NodeId u, NodeId v) const noexcept {
    return static_cast<std::size_t>(u) * n_ - static_cast<std::size_t>(u) * (u + 1) / 2 + (v - u - 1);
  }

 private:

  std::size_t n_;
  WeightTransform transform_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> node_counts_;
  std::vector<std::uint64_t> pair_counts_;
};

/// Accumulates draws [begin, begin + count) of `world` over `shards` private graphs built in
/// parallel and merged in shard order.
ConcurrenceGraph accumulate(const World& world, std::uint64_t begin, std::uint64_t count, unsigned shards = 1,
                            WeightTransform transform = WeightTransform::identity);

}  // namespace concgraph
