#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "concgraph/rng.hpp"

namespace concgraph {

using NodeId = std::uint32_t;

/// Sorted, duplicate-free list of node ids.
using NodeSet = std::vector<NodeId>;

/// Sorts and deduplicates in place.
void normalize(NodeSet& nodes);

/// A bijection on {0..n-1}; `image(i)` is where node i goes.
class Permutation {
 public:
  Permutation() = default;
  /// Throws DomainError unless `map` is a bijection on {0..map.size()-1}.
  explicit Permutation(std::vector<NodeId> map);

  static Permutation identity(std::size_t n);
  /// Uniform random permutation (Fisher-Yates on `rng`).
  static Permutation random(std::size_t n, Rng& rng);
  /// Node k goes to k+1, the last node to 0.
  static Permutation cycle(std::size_t n);

  std::size_t size() const noexcept { return map_.size(); }
  NodeId image(NodeId i) const { return map_[i]; }
  NodeId operator[](NodeId i) const { return map_[i]; }
  std::span<const NodeId> map() const noexcept { return map_; }

  bool is_identity() const noexcept;
  Permutation inverse() const;

  /// Image of a node set, normalized.
  NodeSet apply(std::span<const NodeId> nodes) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<NodeId> map_;
};

/// (a * b)(i) = a(b(i)): apply b first.
Permutation compose(const Permutation& a, const Permutation& b);

/// Result of closing a generator set under composition.
struct GroupClosure {
  std::vector<Permutation> elements;  // identity first, then breadth-first order
  bool truncated = false;
};

/// Breadth-first closure of `generators` under composition, stopping at `cap` elements.
/// All generators must have the same size.
GroupClosure generate_group(std::span<const Permutation> generators, std::size_t cap = 1'000'000);

struct PermutationHash {
  std::size_t operator()(const Permutation& p) const noexcept;
};

}  // namespace concgraph
