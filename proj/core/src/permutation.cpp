#include "concgraph/permutation.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

void normalize(NodeSet& nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
}

Permutation::Permutation(std::vector<NodeId> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (std::size_t i = 0; i < map_.size(); ++i) {
    const NodeId v = map_[i];
    if (v >= map_.size()) {
      throw DomainError(fmt::format("permutation: image {} of node {} out of range (n={})", v, i, map_.size()));
    }
    if (seen[v]) {
      throw DomainError(fmt::format("permutation: node {} is the image of two nodes", v));
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<NodeId> map(n);
  std::iota(map.begin(), map.end(), NodeId{0});
  Permutation p;
  p.map_ = std::move(map);
  return p;
}

Permutation Permutation::random(std::size_t n, Rng& rng) {
  Permutation p = identity(n);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(p.map_[i - 1], p.map_[j]);
  }
  return p;
}

Permutation Permutation::cycle(std::size_t n) {
  std::vector<NodeId> map(n);
  for (std::size_t i = 0; i < n; ++i) map[i] = static_cast<NodeId>((i + 1) % n);
  return Permutation(std::move(map));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < map_.size(); ++i) {
    if (map_[i] != i) return false;
  }
  return true;
}

Permutation Permutation::inverse() const {
  std::vector<NodeId> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = static_cast<NodeId>(i);
  Permutation p;
  p.map_ = std::move(inv);
  return p;
}

NodeSet Permutation::apply(std::span<const NodeId> nodes) const {
  NodeSet out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v >= map_.size()) {
      throw DomainError(fmt::format("permutation: node {} out of range (n={})", v, map_.size()));
    }
    out.push_back(map_[v]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Permutation compose(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) {
    throw DomainError(fmt::format("compose: size mismatch {} vs {}", a.size(), b.size()));
  }
  std::vector<NodeId> map(a.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = a[b[static_cast<NodeId>(i)]];
  return Permutation(std::move(map));
}

std::size_t PermutationHash::operator()(const Permutation& p) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (NodeId v : p.map()) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(mix64(h));
}

GroupClosure generate_group(std::span<const Permutation> generators, std::size_t cap) {
  GroupClosure out;
  if (generators.empty()) return out;
  const std::size_t n = generators.front().size();
  for (const auto& g : generators) {
    if (g.size() != n) throw DomainError("generate_group: generators differ in size");
  }
  std::unordered_set<Permutation, PermutationHash> seen;
  out.elements.push_back(Permutation::identity(n));
  seen.insert(out.elements.front());
  for (std::size_t head = 0; head < out.elements.size(); ++head) {
    for (const auto& g : generators) {
      Permutation next = compose(g, out.elements[head]);
      if (seen.contains(next)) continue;
      if (out.elements.size() >= cap) {
        out.truncated = true;
        return out;
      }
      seen.insert(next);
      out.elements.push_back(std::move(next));
    }
  }
  return out;
}

}  // namespace concgraph
