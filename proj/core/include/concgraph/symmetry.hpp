#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concgraph/concurrence.hpp"
#include "concgraph/permutation.hpp"
#include "concgraph/stimulus.hpp"

namespace concgraph {

/// Immutable dense snapshot of a weighted graph used for scoring permutations.
class GraphView {
 public:
  explicit GraphView(const ConcurrenceGraph& graph);
  /// Full symmetric n x n count and weight matrices (diagonal ignored).
  GraphView(std::size_t n, std::vector<std::uint64_t> counts, std::vector<double> weights);
  /// Integer-weighted graph where weight = count.
  static GraphView from_counts(std::size_t n, std::vector<std::uint64_t> counts);

  std::size_t n() const noexcept { return n_; }
  double weight(NodeId u, NodeId v) const noexcept { return weights_[static_cast<std::size_t>(u) * n_ + v]; }
  std::uint64_t count(NodeId u, NodeId v) const noexcept { return counts_[static_cast<std::size_t>(u) * n_ + v]; }
  /// Nodes sharing an edge (count > 0) with u, ascending.
  std::span<const NodeId> neighbors(NodeId u) const { return neighbors_[u]; }
  double total_weight() const noexcept { return total_weight_; }

 private:
  void finish();

  std::size_t n_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> weights_;
  std::vector<std::vector<NodeId>> neighbors_;
  double total_weight_ = 0.0;
};

/// True iff c(u, v) = c(tau(u), tau(v)) for every pair. Throws DomainError on size mismatch.
bool check_automorphism(const GraphView& graph, const Permutation& tau);

/// sum_{u<v unmasked} |w(u,v) - w(tau u, tau v)| / sum_{u<v unmasked} w(u,v).
/// Zero exactly for automorphisms of the unmasked part. Throws DomainError when the
/// unmasked weight sum is zero.
double distortion(const GraphView& graph, const Permutation& tau, std::span<const NodeId> mask = {});

enum class Family { translation, rotation90, reflection, rescale, log_shift };

std::string to_string(Family f);
Family parse_family(const std::string& text);

struct FamilyParams {
  int dx = 1;
  int dy = 0;
  int steps = 1;          // log_shift
  bool toroidal = false;  // translation wraps around the grid
};

/// A transformation as a node permutation. Nodes without a geometric image are mapped onto
/// the vacated nodes in ascending order and listed in `border_mask`.
struct TransformCandidate {
  std::string label;
  Permutation perm;
  NodeSet border_mask;
};

/// Induced permutation of a detector geometry. Throws DomainError when the family does not
/// apply to the geometry (e.g. rotation90 on a non-square grid).
TransformCandidate geometric_candidate(std::span<const DetectorGeometry> geometry, Family family,
                                       const FamilyParams& params = {});

/// Sorted distortion scores of uniform random permutations.
class NullDistribution {
 public:
  explicit NullDistribution(std::vector<double> scores);

  std::size_t size() const noexcept { return scores_.size(); }
  std::span<const double> scores() const noexcept { return scores_; }
  /// Linear-interpolated quantile, q in [0, 1].
  double quantile(double q) const;
  /// Percentage of null scores <= score, in [0, 100].
  double percentile_rank(double score) const;
  bool below_first_percentile(double score) const { return score < quantile(0.01); }

 private:
  std::vector<double> scores_;
};

/// Sample i uses Rng::for_draw(seed, i), so the result does not depend on evaluation order.
NullDistribution random_permutation_null(const GraphView& graph, std::span<const NodeId> mask, std::size_t samples,
                                         std::uint64_t seed);

struct SymmetryReport {
  std::string label;
  Permutation permutation;
  double distortion = 0.0;
  std::optional<double> null_percentile;
  NodeSet border_mask;
  bool exact = false;  // zero distortion on the unmasked subgraph
};

SymmetryReport score(const GraphView& graph, const TransformCandidate& candidate, const NullDistribution* null = nullptr);

struct SeedPair {
  NodeId from = 0;
  NodeId to = 0;
};

struct LocalSearchOptions {
  int neighborhood_k = 1;
  /// Relative L1 mismatch allowed between a node's anchor weight profile and its image's.
  double tolerance = 0.10;
  /// Strongest already-mapped neighbors compared per node.
  std::size_t anchor_limit = 16;
  /// Times a node may fail to extend before it is given up on.
  std::size_t max_attempts = 4;
};

struct LocalSearchFailure {
  std::size_t seed_index = 0;
  NodeId blocking_node = 0;
  std::vector<std::int64_t> partial_map;  // -1 where unmapped
};

struct LocalSearchResult {
  std::vector<SymmetryReport> candidates;  // ascending distortion
  std::vector<LocalSearchFailure> failures;
};

/// Greedy neighborhood-constrained refinement: for each seed set, grows a partial map from
/// the strongest edge between a mapped and an unmapped node, choosing the image among the
/// k-hop neighbors of the anchor's image whose weight profile matches best.
LocalSearchResult local_search(const GraphView& graph, std::span<const std::vector<SeedPair>> seed_sets,
                               const LocalSearchOptions& options = {}, std::span<const NodeId> mask = {});

struct GroupReport {
  std::size_t order = 0;
  bool truncated = false;
  double max_distortion = 0.0;
  bool closed = false;  // every generated element within tolerance and inverses present
};

/// Closure of `perms` under composition. Throws DomainError if a generator exceeds `tolerance`.
GroupReport group_closure(std::span<const Permutation> perms, const GraphView& graph, double tolerance,
                          std::span<const NodeId> mask = {}, std::size_t cap = 1'000'000);

}  // namespace concgraph
