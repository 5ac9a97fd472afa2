#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concgraph/concurrence.hpp"
#include "concgraph/symmetry.hpp"

namespace concgraph {

/// A higher-layer detector fed by wave fronts: fires when a front equals `pattern`.
struct TemplateDetector {
  int id = 0;
  std::string shape;  // "what": detectors of the same shape report the same identity
  int anchor = 0;     // position of the pattern in transformation space
  NodeSet pattern;
};

struct FrontEntry {
  int step = 0;
  /// Net exponent per generator of the word that produced this front.
  std::vector<int> exponents;
  NodeSet nodes;
  std::optional<int> matched_template;
};

struct WaveTrace {
  int channel = 0;
  std::vector<FrontEntry> fronts;
  std::map<int, int> arrivals;  // template id -> first step it fired
  /// Directions in which a generator image was undefined (masked node), with the step.
  std::vector<std::pair<std::string, int>> terminated;
};

struct PropagateOptions {
  int max_steps = 0;
  /// Generators must score at most this distortion on the graph.
  double tolerance = 1e-12;
  /// Exact set equality when unset; otherwise a front matches when Jaccard >= threshold.
  std::optional<double> jaccard_threshold;
};

/// Breadth-first propagation of `sigma` through the Cayley graph of `generators`: the fronts
/// at step t are the images of sigma under words of length t. A generator image is undefined
/// when the set contains one of the generator's border-masked nodes.
WaveTrace propagate(const GraphView& graph, std::span<const TransformCandidate> generators, const NodeSet& sigma,
                    std::span<const TemplateDetector> templates, const PropagateOptions& options);

/// One isolated channel per segment; channels run concurrently, output is in segment order.
std::vector<WaveTrace> propagate_channels(const GraphView& graph, std::span<const TransformCandidate> generators,
                                          std::span<const NodeSet> segments,
                                          std::span<const TemplateDetector> templates,
                                          const PropagateOptions& options);

struct DecodeResult {
  bool decodable = false;
  std::string what;
  double where = 0.0;
  int dt = 0;  // arrival(second) - arrival(first)
  std::string reason;
  std::map<int, int> arrivals;
};

/// "where" = (anchor_first + anchor_second - dt) / 2, exact in the noiseless model.
DecodeResult decode(const WaveTrace& trace, const TemplateDetector& first, const TemplateDetector& second);

/// Greedy agglomeration of `active` on the induced weighted subgraph. Two clusters merge
/// while their mean inter-cluster weight is positive and at least `resolution` times the
/// mean of their intra-cluster weights (singletons have no intra weight).
std::vector<NodeSet> segment(const GraphView& graph, const NodeSet& active, double resolution);

/// Counts identical front node sets across traces; repeated shapes are the raw material a
/// later template learner would use.
class FrontShapeCounter {
 public:
  void observe(const WaveTrace& trace);
  std::size_t count(const NodeSet& front) const;
  std::size_t distinct() const noexcept { return counts_.size(); }
  std::size_t repeated() const;

 private:
  std::map<NodeSet, std::size_t> counts_;
};

/// Exponent word such as "+1;-2" (one signed entry per generator).
std::string format_word(const std::vector<int>& exponents);

/// Stable 64-bit hash of a node set, used in trace dumps.
std::uint64_t node_set_hash(const NodeSet& nodes);

/// One-dimensional retina: `positions` positions, each with a horizontal (node 2x) and a
/// vertical (node 2x+1) detector.
struct LineRetina {
  int positions = 0;
  std::vector<DetectorGeometry> geometry;
  ConcurrenceGraph graph{0};
  TransformCandidate shift;  // x -> x + 1; the last position is border-masked

  NodeId horizontal(int x) const { return static_cast<NodeId>(2 * x); }
  NodeId vertical(int x) const { return static_cast<NodeId>(2 * x + 1); }
  /// The letter H at x: vertical at x, horizontal at x+1, vertical at x+2.
  NodeSet letter_h(int x) const;
  /// H-detectors anchored at the first and last in-range positions.
  std::pair<TemplateDetector, TemplateDetector> h_detectors() const;
  int last_anchor() const { return positions - 3; }
};

/// Builds the retina and an exactly shift-invariant concurrence graph by recording a fixed
/// motif family at every in-range placement.
LineRetina make_line_retina(int positions);

}  // namespace concgraph
