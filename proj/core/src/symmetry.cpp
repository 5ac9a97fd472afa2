#include "concgraph/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

// ---------------------------------------------------------------------------
// GraphView
// ---------------------------------------------------------------------------

GraphView::GraphView(const ConcurrenceGraph& graph)
    : n_(graph.n()), counts_(graph.n() * graph.n(), 0), weights_(graph.weight_matrix()) {
  for (NodeId u = 0; u < n_; ++u) {
    for (NodeId v = u + 1; v < n_; ++v) {
      const auto c = graph.count(u, v);
      counts_[u * n_ + v] = c;
      counts_[v * n_ + u] = c;
    }
  }
  finish();
}

GraphView::GraphView(std::size_t n, std::vector<std::uint64_t> counts, std::vector<double> weights)
    : n_(n), counts_(std::move(counts)), weights_(std::move(weights)) {
  if (counts_.size() != n * n || weights_.size() != n * n) throw DomainError("graph view: matrix size != n*n");
  for (std::size_t u = 0; u < n; ++u) {
    counts_[u * n + u] = 0;
    weights_[u * n + u] = 0.0;
    for (std::size_t v = u + 1; v < n; ++v) {
      if (counts_[u * n + v] != counts_[v * n + u] || weights_[u * n + v] != weights_[v * n + u]) {
        throw DomainError("graph view: matrices must be symmetric");
      }
      if (weights_[u * n + v] < 0.0) throw DomainError("graph view: negative weight");
      if ((counts_[u * n + v] == 0) != (weights_[u * n + v] == 0.0)) {
        throw DomainError("graph view: zero weight must coincide with zero count");
      }
    }
  }
  finish();
}

GraphView GraphView::from_counts(std::size_t n, std::vector<std::uint64_t> counts) {
  std::vector<double> weights(counts.size());
  std::transform(counts.begin(), counts.end(), weights.begin(), [](std::uint64_t c) { return static_cast<double>(c); });
  return GraphView(n, std::move(counts), std::move(weights));
}

void GraphView::finish() {
  neighbors_.assign(n_, {});
  total_weight_ = 0.0;
  for (NodeId u = 0; u < n_; ++u) {
    for (NodeId v = 0; v < n_; ++v) {
      if (u != v && counts_[u * n_ + v] > 0) neighbors_[u].push_back(v);
      if (u < v) total_weight_ += weights_[u * n_ + v];
    }
  }
}

// ---------------------------------------------------------------------------
// Exact check and distortion
// ---------------------------------------------------------------------------

namespace {

void require_size(const GraphView& graph, const Permutation& tau) {
  if (tau.size() != graph.n()) {
    throw DomainError(fmt::format("permutation size {} does not match graph size {}", tau.size(), graph.n()));
  }
}

std::vector<bool> mask_bits(std::size_t n, std::span<const NodeId> mask) {
  std::vector<bool> bits(n, false);
  for (NodeId v : mask) {
    if (v >= n) throw DomainError(fmt::format("mask node {} out of range", v));
    bits[v] = true;
  }
  return bits;
}

}  // namespace

bool check_automorphism(const GraphView& graph, const Permutation& tau) {
  require_size(graph, tau);
  const auto n = static_cast<NodeId>(graph.n());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (graph.count(u, v) != graph.count(tau[u], tau[v])) return false;
    }
  }
  return true;
}

double distortion(const GraphView& graph, const Permutation& tau, std::span<const NodeId> mask) {
  require_size(graph, tau);
  const auto n = static_cast<NodeId>(graph.n());
  const auto masked = mask_bits(n, mask);
  double diff = 0.0;
  double total = 0.0;
  for (NodeId u = 0; u < n; ++u) {
    if (masked[u]) continue;
    const NodeId tu = tau[u];
    for (NodeId v = u + 1; v < n; ++v) {
      if (masked[v]) continue;
      const double w = graph.weight(u, v);
      total += w;
      diff += std::abs(w - graph.weight(tu, tau[v]));
    }
  }
  if (total == 0.0) throw DomainError("distortion: undefined on a graph with zero unmasked weight");
  return diff / total;
}

// ---------------------------------------------------------------------------
// Geometric candidates
// ---------------------------------------------------------------------------

std::string to_string(Family f) {
  switch (f) {
    case Family::translation: return "translation";
    case Family::rotation90: return "rotation90";
    case Family::reflection: return "reflection";
    case Family::rescale: return "rescale";
    case Family::log_shift: return "log_shift";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  for (auto f : {Family::translation, Family::rotation90, Family::reflection, Family::rescale, Family::log_shift}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError(fmt::format("unknown transformation family '{}'", text));
}

namespace {

using GeoKey = std::tuple<long, long, long, int>;

GeoKey key_of(double x, double y, double omega, int level) {
  double o = std::fmod(omega, 180.0);
  if (o < 0) o += 180.0;
  auto milli = std::lround(o * 1000.0);
  if (milli == 180000) milli = 0;
  return {std::lround(x), std::lround(y), milli, level};
}

}  // namespace

TransformCandidate geometric_candidate(std::span<const DetectorGeometry> geometry, Family family,
                                       const FamilyParams& params) {
  validate_geometry(geometry);
  const std::size_t n = geometry.size();
  if (n == 0) throw DomainError("geometric_candidate: empty geometry");

  std::map<GeoKey, NodeId> lookup;
  bool one_dimensional = true;
  int max_level = 0;
  double width = 0.0;
  double height = 0.0;
  std::unordered_set<long> omegas;
  for (const auto& g : geometry) {
    lookup.emplace(key_of(g.x, g.y, g.omega, g.scale_level), g.id);
    if (g.y != 0.0 || g.omega != 0.0 || g.scale_level != 0) one_dimensional = false;
    max_level = std::max(max_level, g.scale_level);
    width = std::max(width, g.x + g.lambda());
    height = std::max(height, g.y + g.lambda());
    omegas.insert(std::get<2>(key_of(0, 0, g.omega, 0)));
  }
  if (one_dimensional) height = 0.0;

  auto wrap_x = [&](double x) { return params.toroidal ? x - width * std::floor(x / width) : x; };
  auto wrap_y = [&](double y) { return params.toroidal && height > 0 ? y - height * std::floor(y / height) : y; };

  std::string label;
  std::function<std::optional<GeoKey>(const DetectorGeometry&)> image;
  switch (family) {
    case Family::translation:
      if (one_dimensional && params.dy != 0) throw DomainError("translation: dy must be 0 on a one-dimensional axis");
      label = fmt::format("translation({},{})", params.dx, params.dy);
      image = [&](const DetectorGeometry& g) -> std::optional<GeoKey> {
        return key_of(wrap_x(g.x + params.dx), wrap_y(g.y + params.dy), g.omega, g.scale_level);
      };
      break;
    case Family::rotation90:
      if (one_dimensional) throw DomainError("rotation90: not applicable to a one-dimensional geometry");
      if (width != height) throw DomainError("rotation90: requires a square grid");
      for (long o : omegas) {
        if (!omegas.contains((o + 90000) % 180000)) throw DomainError("rotation90: orientation set not closed under +90");
      }
      label = "rotation90";
      image = [&](const DetectorGeometry& g) -> std::optional<GeoKey> {
        return key_of(width - g.lambda() - g.y, g.x, g.omega + 90.0, g.scale_level);
      };
      break;
    case Family::reflection:
      if (one_dimensional) throw DomainError("reflection: not applicable to a one-dimensional geometry");
      label = "reflection";
      image = [&](const DetectorGeometry& g) -> std::optional<GeoKey> {
        return key_of(width - g.lambda() - g.x, g.y, 180.0 - g.omega, g.scale_level);
      };
      break;
    case Family::rescale:
      if (max_level == 0) throw DomainError("rescale: geometry has a single scale level");
      label = "rescale";
      image = [&](const DetectorGeometry& g) -> std::optional<GeoKey> {
        return key_of(2.0 * g.x, 2.0 * g.y, g.omega, g.scale_level + 1);
      };
      break;
    case Family::log_shift:
      if (!one_dimensional) throw DomainError("log_shift: requires a one-dimensional (band) geometry");
      label = fmt::format("log_shift({})", params.steps);
      image = [&](const DetectorGeometry& g) -> std::optional<GeoKey> {
        return key_of(g.x + params.steps, 0.0, 0.0, 0);
      };
      break;
  }

  std::vector<std::int64_t> partial(n, -1);
  std::vector<bool> used(n, false);
  TransformCandidate out;
  out.label = label;
  for (const auto& g : geometry) {
    const auto k = image(g);
    const auto it = k ? lookup.find(*k) : lookup.end();
    if (it == lookup.end()) {
      out.border_mask.push_back(g.id);
      continue;
    }
    if (used[it->second]) throw DomainError("geometric_candidate: transformation is not injective on this geometry");
    partial[g.id] = it->second;
    used[it->second] = true;
  }
  std::size_t next_free = 0;
  std::vector<NodeId> map(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (partial[i] < 0) {
      while (used[next_free]) ++next_free;
      used[next_free] = true;
      partial[i] = static_cast<std::int64_t>(next_free);
    }
    map[i] = static_cast<NodeId>(partial[i]);
  }
  out.perm = Permutation(std::move(map));
  return out;
}

// ---------------------------------------------------------------------------
// Null distribution and scoring
// ---------------------------------------------------------------------------

NullDistribution::NullDistribution(std::vector<double> scores) : scores_(std::move(scores)) {
  if (scores_.empty()) throw DomainError("null distribution: no samples");
  std::sort(scores_.begin(), scores_.end());
}

double NullDistribution::quantile(double q) const {
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(scores_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, scores_.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return scores_[lo] + frac * (scores_[hi] - scores_[lo]);
}

double NullDistribution::percentile_rank(double score) const {
  const auto le = std::upper_bound(scores_.begin(), scores_.end(), score) - scores_.begin();
  return 100.0 * static_cast<double>(le) / static_cast<double>(scores_.size());
}

NullDistribution random_permutation_null(const GraphView& graph, std::span<const NodeId> mask, std::size_t samples,
                                         std::uint64_t seed) {
  std::vector<double> scores(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = Rng::for_draw(seed, i);
    scores[i] = distortion(graph, Permutation::random(graph.n(), rng), mask);
  }
  return NullDistribution(std::move(scores));
}

SymmetryReport score(const GraphView& graph, const TransformCandidate& candidate, const NullDistribution* null) {
  SymmetryReport r;
  r.label = candidate.label;
  r.permutation = candidate.perm;
  r.border_mask = candidate.border_mask;
  r.distortion = distortion(graph, candidate.perm, candidate.border_mask);
  r.exact = r.distortion == 0.0;
  if (null) r.null_percentile = null->percentile_rank(r.distortion);
  return r;
}

// ---------------------------------------------------------------------------
// Local search
// ---------------------------------------------------------------------------

namespace {

struct Frontier {
  double weight;
  NodeId target;  // unmapped node
  NodeId anchor;  // mapped node
  bool operator<(const Frontier& o) const {
    // max-heap on weight; ties to the lowest target, then the lowest anchor
    if (weight != o.weight) return weight < o.weight;
    if (target != o.target) return target > o.target;
    return anchor > o.anchor;
  }
};

class Extender {
 public:
  Extender(const GraphView& g, const LocalSearchOptions& opt) : g_(g), opt_(opt) {}

  /// Returns the unmapped node that blocked completion, or nullopt on success.
  std::optional<NodeId> run(const std::vector<SeedPair>& seeds, std::vector<std::int64_t>& f) {
    const std::size_t n = g_.n();
    f.assign(n, -1);
    used_.assign(n, false);
    inverse_.assign(n, -1);
    mapped_.clear();
    attempts_.assign(n, 0);
    support_.assign(n, 0.0);
    failed_support_.assign(n, 0.0);
    best_anchor_weight_.assign(n, 0.0);
    best_anchor_.assign(n, 0);
    std::priority_queue<Frontier> heap;
    for (const auto& s : seeds) {
      if (s.from >= n || s.to >= n) throw DomainError("local_search: seed node out of range");
      if (f[s.from] >= 0 && f[s.from] != s.to) throw DomainError("local_search: seed maps a node twice");
      if (f[s.from] < 0 && used_[s.to]) throw DomainError("local_search: seed is not injective");
      if (f[s.from] >= 0) continue;
      assign(f, s.from, s.to, heap);
    }
    std::optional<NodeId> first_block;
    while (!heap.empty()) {
      const Frontier top = heap.top();
      heap.pop();
      if (f[top.target] >= 0) continue;
      if (top.weight != support_[top.target]) continue;  // stale entry
      if (attempts_[top.target] >= opt_.max_attempts) continue;
      // Retry a failed node only once its mapped support has doubled.
      if (top.weight < 2.0 * failed_support_[top.target]) continue;
      ++attempts_[top.target];
      const auto choice = best_image(f, top.target, static_cast<NodeId>(f[top.anchor]));
      if (choice) {
        assign(f, top.target, *choice, heap);
      } else {
        failed_support_[top.target] = top.weight;
        if (!first_block) first_block = top.target;
      }
    }
    // Blocked nodes get one more look against the grown map, until nothing changes.
    for (bool progress = true; progress;) {
      progress = false;
      for (NodeId v = 0; v < n; ++v) {
        if (f[v] >= 0 || support_[v] == 0.0) continue;
        if (const auto choice = best_image(f, v, static_cast<NodeId>(f[best_anchor_[v]]))) {
          assign(f, v, *choice, heap);
          progress = true;
        }
      }
    }
    // Isolated nodes are interchangeable; pair them up in ascending order.
    std::vector<NodeId> free_isolated;
    for (NodeId v = 0; v < n; ++v) {
      if (!used_[v] && g_.neighbors(v).empty()) free_isolated.push_back(v);
    }
    std::size_t next = 0;
    for (NodeId v = 0; v < n; ++v) {
      if (f[v] >= 0) continue;
      if (!g_.neighbors(v).empty() || next >= free_isolated.size()) {
        return first_block && f[*first_block] < 0 ? *first_block : v;
      }
      f[v] = free_isolated[next];
      used_[free_isolated[next++]] = true;
    }
    return std::nullopt;
  }

 private:
  void assign(std::vector<std::int64_t>& f, NodeId v, NodeId image, std::priority_queue<Frontier>& heap) {
    f[v] = image;
    used_[image] = true;
    inverse_[image] = v;
    mapped_.push_back(v);
    // Nodes with the most mapped weight around them are extended first.
    for (NodeId y : g_.neighbors(v)) {
      if (f[y] >= 0) continue;
      const double w = g_.weight(v, y);
      support_[y] += w;
      if (w > best_anchor_weight_[y] || (w == best_anchor_weight_[y] && v < best_anchor_[y])) {
        best_anchor_weight_[y] = w;
        best_anchor_[y] = v;
      }
      heap.push(Frontier{support_[y], y, best_anchor_[y]});
    }
  }

  std::vector<NodeId> hop_ball(NodeId center) const {
    if (opt_.neighborhood_k <= 1) {
      auto nb = g_.neighbors(center);
      return {nb.begin(), nb.end()};
    }
    std::vector<int> depth(g_.n(), -1);
    std::vector<NodeId> order{center};
    depth[center] = 0;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const NodeId x = order[head];
      if (depth[x] >= opt_.neighborhood_k) continue;
      for (NodeId y : g_.neighbors(x)) {
        if (depth[y] < 0) {
          depth[y] = depth[x] + 1;
          order.push_back(y);
        }
      }
    }
    order.erase(order.begin());
    std::sort(order.begin(), order.end());
    return order;
  }

  std::optional<NodeId> best_image(const std::vector<std::int64_t>& f, NodeId v, NodeId anchor_image) const {
    // Strongest mapped neighbors of v form its weight profile.
    std::vector<std::pair<double, NodeId>> anchors;
    for (NodeId x : mapped_) {
      const double w = g_.weight(v, x);
      if (w > 0.0) anchors.emplace_back(w, x);
    }
    const std::size_t keep = std::min(anchors.size(), opt_.anchor_limit);
    std::partial_sort(anchors.begin(), anchors.begin() + static_cast<std::ptrdiff_t>(keep), anchors.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    anchors.resize(keep);
    const double floor = anchors.empty() ? 0.0 : anchors.back().first;

    std::optional<NodeId> best;
    double best_cost = 0.0;
    for (NodeId c : hop_ball(anchor_image)) {
      if (used_[c]) continue;
      double mismatch = 0.0;
      double scale = 0.0;
      for (const auto& [w, x] : anchors) {
        const double wc = g_.weight(c, static_cast<NodeId>(f[x]));
        mismatch += std::abs(w - wc);
        scale += std::max(w, wc);
      }
      // Strong ties of c to mapped images that v lacks count against c.
      for (NodeId y : g_.neighbors(c)) {
        const std::int64_t x = inverse_[y];
        if (x < 0) continue;
        const double wc = g_.weight(c, y);
        if (wc < floor || g_.weight(v, static_cast<NodeId>(x)) > 0.0) continue;
        mismatch += wc;
        scale += wc;
      }
      if (scale == 0.0 || mismatch > opt_.tolerance * scale) continue;
      if (!best || mismatch < best_cost) {
        best = c;
        best_cost = mismatch;
      }
    }
    return best;
  }

  const GraphView& g_;
  const LocalSearchOptions& opt_;
  std::vector<bool> used_;
  std::vector<std::int64_t> inverse_;
  std::vector<NodeId> mapped_;
  std::vector<std::size_t> attempts_;
  std::vector<double> support_;
  std::vector<double> failed_support_;
  std::vector<double> best_anchor_weight_;
  std::vector<NodeId> best_anchor_;
};

}  // namespace

LocalSearchResult local_search(const GraphView& graph, std::span<const std::vector<SeedPair>> seed_sets,
                               const LocalSearchOptions& options, std::span<const NodeId> mask) {
  if (options.neighborhood_k < 1) throw DomainError("local_search: neighborhood_k must be >= 1");
  LocalSearchResult result;
  Extender extender(graph, options);
  for (std::size_t s = 0; s < seed_sets.size(); ++s) {
    std::vector<std::int64_t> f;
    const auto block = extender.run(seed_sets[s], f);
    if (block) {
      result.failures.push_back(LocalSearchFailure{s, *block, std::move(f)});
      continue;
    }
    std::vector<NodeId> map(f.begin(), f.end());
    SymmetryReport r;
    r.label = fmt::format("local_search[{}]", s);
    r.permutation = Permutation(std::move(map));
    r.border_mask.assign(mask.begin(), mask.end());
    r.distortion = distortion(graph, r.permutation, mask);
    r.exact = r.distortion == 0.0;
    result.candidates.push_back(std::move(r));
  }
  std::stable_sort(result.candidates.begin(), result.candidates.end(),
                   [](const SymmetryReport& a, const SymmetryReport& b) { return a.distortion < b.distortion; });
  return result;
}

// ---------------------------------------------------------------------------
// Group closure
// ---------------------------------------------------------------------------

GroupReport group_closure(std::span<const Permutation> perms, const GraphView& graph, double tolerance,
                          std::span<const NodeId> mask, std::size_t cap) {
  for (const auto& p : perms) {
    const double d = distortion(graph, p, mask);
    if (d > tolerance) {
      throw DomainError(fmt::format("group_closure: generator distortion {} exceeds tolerance {}", d, tolerance));
    }
  }
  GroupReport r;
  if (perms.empty()) {
    r.order = 1;
    r.closed = true;
    return r;
  }
  const auto closure = generate_group(perms, cap);
  r.order = closure.elements.size();
  r.truncated = closure.truncated;
  std::unordered_set<Permutation, PermutationHash> members(closure.elements.begin(), closure.elements.end());
  bool inverses = true;
  for (const auto& g : closure.elements) {
    r.max_distortion = std::max(r.max_distortion, distortion(graph, g, mask));
    if (!members.contains(g.inverse())) inverses = false;
  }
  r.closed = !r.truncated && inverses && r.max_distortion <= tolerance;
  return r;
}

}  // namespace concgraph
