#include "concgraph/readout.hpp"

#include <algorithm>
#include <future>
#include <set>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

namespace {

struct PreparedGenerator {
  const Permutation* forward;
  Permutation backward;
  std::vector<bool> masked;
};

std::optional<NodeSet> step_image(const PreparedGenerator& g, const NodeSet& set, int sign) {
  NodeSet out;
  out.reserve(set.size());
  for (NodeId v : set) {
    if (sign > 0) {
      if (g.masked[v]) return std::nullopt;
      out.push_back((*g.forward)[v]);
    } else {
      const NodeId pre = g.backward[v];
      if (g.masked[pre]) return std::nullopt;
      out.push_back(pre);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double jaccard(const NodeSet& a, const NodeSet& b) {
  NodeSet both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  const std::size_t uni = a.size() + b.size() - both.size();
  return uni == 0 ? 1.0 : static_cast<double>(both.size()) / static_cast<double>(uni);
}

}  // namespace

WaveTrace propagate(const GraphView& graph, std::span<const TransformCandidate> generators, const NodeSet& sigma,
                    std::span<const TemplateDetector> templates, const PropagateOptions& options) {
  if (sigma.empty()) throw DomainError("propagate: empty active set");
  if (options.max_steps < 0) throw DomainError("propagate: max_steps must be >= 0");
  for (NodeId v : sigma) {
    if (v >= graph.n()) throw DomainError(fmt::format("propagate: node {} out of range", v));
  }
  std::vector<PreparedGenerator> gens;
  for (const auto& g : generators) {
    const double d = distortion(graph, g.perm, g.border_mask);
    if (d > options.tolerance) {
      throw DomainError(fmt::format("propagate: generator {} has distortion {} > tolerance {}", g.label, d,
                                    options.tolerance));
    }
    PreparedGenerator p{&g.perm, g.perm.inverse(), std::vector<bool>(graph.n(), false)};
    for (NodeId v : g.border_mask) p.masked[v] = true;
    gens.push_back(std::move(p));
  }

  WaveTrace trace;
  auto match = [&](FrontEntry& entry) {
    for (const auto& t : templates) {
      const bool hit = options.jaccard_threshold ? jaccard(entry.nodes, t.pattern) >= *options.jaccard_threshold
                                                 : entry.nodes == t.pattern;
      if (!hit) continue;
      if (!entry.matched_template) entry.matched_template = t.id;
      trace.arrivals.emplace(t.id, entry.step);
    }
  };

  std::set<NodeSet> visited{sigma};
  std::vector<FrontEntry> frontier{FrontEntry{0, std::vector<int>(gens.size(), 0), sigma, std::nullopt}};
  match(frontier.front());
  trace.fronts.push_back(frontier.front());

  for (int t = 1; t <= options.max_steps && !frontier.empty(); ++t) {
    std::vector<FrontEntry> next;
    for (const auto& front : frontier) {
      for (std::size_t gi = 0; gi < gens.size(); ++gi) {
        for (int sign : {+1, -1}) {
          std::vector<int> exps = front.exponents;
          exps[gi] += sign;
          auto image = step_image(gens[gi], front.nodes, sign);
          if (!image) {
            trace.terminated.emplace_back(format_word(exps), t);
            continue;
          }
          if (!visited.insert(*image).second) continue;
          FrontEntry entry{t, std::move(exps), std::move(*image), std::nullopt};
          match(entry);
          next.push_back(std::move(entry));
        }
      }
    }
    trace.fronts.insert(trace.fronts.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return trace;
}

std::vector<WaveTrace> propagate_channels(const GraphView& graph, std::span<const TransformCandidate> generators,
                                          std::span<const NodeSet> segments,
                                          std::span<const TemplateDetector> templates,
                                          const PropagateOptions& options) {
  std::vector<std::future<WaveTrace>> jobs;
  jobs.reserve(segments.size());
  for (const auto& seg : segments) {
    jobs.push_back(std::async(std::launch::async,
                              [&, seg_ptr = &seg] { return propagate(graph, generators, *seg_ptr, templates, options); }));
  }
  std::vector<WaveTrace> out;
  out.reserve(jobs.size());
  for (std::size_t c = 0; c < jobs.size(); ++c) {
    out.push_back(jobs[c].get());
    out.back().channel = static_cast<int>(c);
  }
  return out;
}

DecodeResult decode(const WaveTrace& trace, const TemplateDetector& first, const TemplateDetector& second) {
  DecodeResult r;
  r.arrivals = trace.arrivals;
  const auto a = trace.arrivals.find(first.id);
  const auto b = trace.arrivals.find(second.id);
  if (a == trace.arrivals.end() || b == trace.arrivals.end()) {
    r.reason = fmt::format("undecodable: {} of 2 detectors fired", (a != trace.arrivals.end()) + (b != trace.arrivals.end()));
    return r;
  }
  if (first.shape != second.shape) {
    r.reason = "undecodable: detector pair reports different shapes";
    return r;
  }
  r.decodable = true;
  r.what = first.shape;
  r.dt = b->second - a->second;
  r.where = (first.anchor + second.anchor - r.dt) / 2.0;
  return r;
}

std::vector<NodeSet> segment(const GraphView& graph, const NodeSet& active, double resolution) {
  if (active.empty()) throw DomainError("segment: empty active set");
  std::vector<NodeSet> clusters;
  for (NodeId v : active) {
    if (v >= graph.n()) throw DomainError(fmt::format("segment: node {} out of range", v));
    clusters.push_back({v});
  }
  auto intra = [&](const NodeSet& c) -> std::optional<double> {
    if (c.size() < 2) return std::nullopt;
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) s += graph.weight(c[i], c[j]);
    }
    return s / (static_cast<double>(c.size()) * static_cast<double>(c.size() - 1) / 2.0);
  };
  auto inter = [&](const NodeSet& a, const NodeSet& b) {
    double s = 0.0;
    for (NodeId x : a) {
      for (NodeId y : b) s += graph.weight(x, y);
    }
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };

  while (clusters.size() > 1) {
    struct Pair {
      double inter;
      std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) pairs.push_back({inter(clusters[i], clusters[j]), i, j});
    }
    // Clusters are kept ordered by their lowest node, so index order is node order.
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.inter > b.inter; });
    bool merged = false;
    for (const auto& p : pairs) {
      if (!(p.inter > 0.0)) break;
      const auto ia = intra(clusters[p.i]);
      const auto ib = intra(clusters[p.j]);
      double reference = 0.0;
      if (ia && ib) {
        reference = (*ia + *ib) / 2.0;
      } else if (ia || ib) {
        reference = ia ? *ia : *ib;
      }
      if (p.inter < resolution * reference) continue;
      NodeSet joined = clusters[p.i];
      joined.insert(joined.end(), clusters[p.j].begin(), clusters[p.j].end());
      normalize(joined);
      clusters[p.i] = std::move(joined);
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(p.j));
      merged = true;
      break;
    }
    if (!merged) break;
  }
  return clusters;
}

void FrontShapeCounter::observe(const WaveTrace& trace) {
  for (const auto& f : trace.fronts) ++counts_[f.nodes];
}

std::size_t FrontShapeCounter::count(const NodeSet& front) const {
  const auto it = counts_.find(front);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t FrontShapeCounter::repeated() const {
  return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](const auto& kv) { return kv.second > 1; }));
}

std::string format_word(const std::vector<int>& exponents) {
  std::string s;
  for (std::size_t i = 0; i < exponents.size(); ++i) s += fmt::format("{}{:+d}", i ? ";" : "", exponents[i]);
  return s;
}

std::uint64_t node_set_hash(const NodeSet& nodes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (NodeId v : nodes) {
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

NodeSet LineRetina::letter_h(int x) const {
  if (x < 0 || x + 2 >= positions) throw DomainError(fmt::format("letter H at {} does not fit the retina", x));
  NodeSet s{vertical(x), horizontal(x + 1), vertical(x + 2)};
  normalize(s);
  return s;
}

std::pair<TemplateDetector, TemplateDetector> LineRetina::h_detectors() const {
  return {TemplateDetector{0, "H", 0, letter_h(0)}, TemplateDetector{1, "H", last_anchor(), letter_h(last_anchor())}};
}

LineRetina make_line_retina(int positions) {
  if (positions < 4) throw DomainError("line retina: need at least 4 positions");
  LineRetina r;
  r.positions = positions;
  for (int x = 0; x < positions; ++x) {
    r.geometry.push_back(DetectorGeometry{r.horizontal(x), double(x), 0.0, 0.0, 0});
    r.geometry.push_back(DetectorGeometry{r.vertical(x), double(x), 0.0, 90.0, 0});
  }
  // Pair motifs (offset, orientation of first, orientation of second, multiplicity). Each is
  // recorded at every in-range placement, so pair counts depend only on relative position.
  struct Motif {
    int offset;
    bool first_vertical;
    bool second_vertical;
    int repeat;
  };
  const Motif motifs[] = {{1, false, false, 3}, {2, false, false, 1}, {1, true, true, 1},
                          {2, true, true, 2},   {1, true, false, 2},  {1, false, true, 2}};
  r.graph = ConcurrenceGraph(r.geometry.size());
  std::uint64_t t = 0;
  for (const auto& m : motifs) {
    for (int rep = 0; rep < m.repeat; ++rep) {
      for (int x = 0; x + m.offset < positions; ++x) {
        NodeSet s{m.first_vertical ? r.vertical(x) : r.horizontal(x),
                  m.second_vertical ? r.vertical(x + m.offset) : r.horizontal(x + m.offset)};
        normalize(s);
        r.graph.record(Observation{t++, std::move(s)});
      }
    }
  }
  FamilyParams params;
  params.dx = 1;
  r.shift = geometric_candidate(r.geometry, Family::translation, params);
  return r;
}

}  // namespace concgraph
