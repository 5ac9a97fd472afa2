#include "concgraph/experiment.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "concgraph/concurrence.hpp"
#include "concgraph/digest.hpp"
#include "concgraph/error.hpp"
#include "concgraph/harness.hpp"
#include "concgraph/readout.hpp"

namespace concgraph {

namespace {

double interpolated_quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AbGroupResult run_group(const AbConfig& c, const std::string& name, bool scramble, std::uint64_t draws,
                        std::span<const NodeSet> probes) {
  WorldConfig wc = c.world;
  wc.rotation_scramble = scramble;
  wc.seed = stage_seed(c.seed, "stimulus");
  const EdgeWorld world(wc);
  const Permutation rot = world.rotation90();

  std::vector<Observation> stream;
  stream.reserve(draws);
  for (std::uint64_t i = 0; i < draws; ++i) stream.push_back(world.draw(i));
  ConcurrenceGraph graph(world.n());
  graph.record(stream);

  AbGroupResult r;
  r.name = name;
  r.rotation_scramble = scramble;
  r.draws = draws;
  const GraphView view(graph);
  r.distortion = distortion(view, rot);
  const auto null = random_permutation_null(view, {}, c.null_samples, stage_seed(c.seed, "null-" + name));
  r.null_q01 = null.quantile(0.01);
  r.null_percentile = null.percentile_rank(r.distortion);
  r.below_first_percentile = null.below_first_percentile(r.distortion);

  std::vector<double> boot;
  for (std::size_t b = 0; b < c.bootstrap; ++b) {
    Rng rng = Rng::for_draw(stage_seed(c.seed, "bootstrap-" + name), b);
    ConcurrenceGraph g(world.n());
    for (const auto& obs : stream) {
      if (const auto m = rng.poisson(1.0)) g.record(obs, m);
    }
    if (g.total() == 0) continue;
    try {
      boot.push_back(distortion(GraphView(g), rot));
    } catch (const DomainError&) {
      // All-zero resample: no pair weight to score.
    }
  }
  r.bootstrap_lo = interpolated_quantile(boot, 0.05);
  r.bootstrap_hi = interpolated_quantile(boot, 0.95);
  r.separable = !boot.empty() && (r.bootstrap_hi < r.null_q01 || r.bootstrap_lo > r.null_q01);

  // Recognition proxy: recover the rotation from the graph by local search seeded with three
  // true correspondences near the center (one pair leaves reflections open), then read out
  // rotated probes with the recovered symmetry.
  const int cx = world.cells_x(0) / 2, cy = world.cells_y(0) / 2;
  std::vector<SeedPair> seed_set;
  for (const NodeId u : {world.node(0, cx, cy, 0), world.node(0, cx, cy, 1), world.node(0, cx + 2, cy + 1, 0)}) {
    seed_set.push_back(SeedPair{u, rot[u]});
  }
  const std::vector<std::vector<SeedPair>> seeds{seed_set};
  const auto search = local_search(view, seeds, c.search);
  std::vector<std::int64_t> map(world.n(), -1);
  if (!search.candidates.empty()) {
    r.search_complete = true;
    const auto& p = search.candidates.front().permutation;
    for (NodeId v = 0; v < world.n(); ++v) map[v] = p[v];
  } else if (!search.failures.empty()) {
    map = search.failures.front().partial_map;
  }
  std::size_t agree = 0;
  for (NodeId v = 0; v < world.n(); ++v) agree += map[v] == static_cast<std::int64_t>(rot[v]);
  r.search_agreement = static_cast<double>(agree) / static_cast<double>(world.n());

  std::size_t recognized = 0;
  if (r.search_complete) {
    const TransformCandidate generator{"local_search", search.candidates.front().permutation, {}};
    PropagateOptions opt;
    opt.max_steps = 2;
    opt.tolerance = std::numeric_limits<double>::infinity();
    for (const auto& probe : probes) {
      const TemplateDetector tmpl{0, "probe", 0, probe};
      const auto trace = propagate(view, std::span(&generator, 1), rot.apply(probe), std::span(&tmpl, 1), opt);
      recognized += trace.arrivals.contains(0);
    }
  } else {
    // Partial map: a probe is recognized when every rotated node has a known preimage that
    // reproduces the template.
    std::vector<std::int64_t> inverse(world.n(), -1);
    for (NodeId v = 0; v < world.n(); ++v) {
      if (map[v] >= 0) inverse[static_cast<std::size_t>(map[v])] = v;
    }
    for (const auto& probe : probes) {
      NodeSet back;
      bool ok = true;
      for (NodeId v : rot.apply(probe)) {
        if (inverse[v] < 0) {
          ok = false;
          break;
        }
        back.push_back(static_cast<NodeId>(inverse[v]));
      }
      normalize(back);
      recognized += ok && back == probe;
    }
  }
  r.recognition = probes.empty() ? 0.0 : static_cast<double>(recognized) / static_cast<double>(probes.size());
  return r;
}

Json group_json(const AbGroupResult& g) {
  return Json{{"name", g.name},
              {"rotation_scramble", g.rotation_scramble},
              {"draws", g.draws},
              {"distortion", g.distortion},
              {"null_q01", g.null_q01},
              {"null_percentile", g.null_percentile},
              {"below_first_percentile", g.below_first_percentile},
              {"bootstrap_lo", g.bootstrap_lo},
              {"bootstrap_hi", g.bootstrap_hi},
              {"separable", g.separable},
              {"search_complete", g.search_complete},
              {"search_agreement", g.search_agreement},
              {"recognition_proxy", g.recognition}};
}

}  // namespace

AbConfig default_ab_config() {
  AbConfig c;
  c.world.kind = WorldKind::edge_image;
  c.world.anisotropy = 0.8;
  c.world.frames_per_video = 8;
  // Weight noise at this budget exceeds the generic 10% profile tolerance.
  c.search.tolerance = 0.3;
  return c;
}

std::string AbConfig::canonical() const {
  std::string out = "[world]\n" + world.canonical() + "[ab]\n";
  out += fmt::format("seed = {}\ndraws_a = {}\ndraws_b = {}\nnull_samples = {}\nprobes = {}\nbootstrap = {}\n", seed,
                     draws_a, draws_b, null_samples, probes, bootstrap);
  out += fmt::format("neighborhood_k = {}\ntolerance = {}\nanchor_limit = {}\nmax_attempts = {}\n", search.neighborhood_k,
                     search.tolerance, search.anchor_limit, search.max_attempts);
  return out;
}

AbConfig parse_ab_config(const ConfigFile& file) {
  file.check_sections({"world", "ab"});
  AbConfig c = default_ab_config();
  if (file.has_section("world")) {
    auto w = file.section("world");
    // Start from the experiment defaults rather than the generic world defaults.
    const auto defaults = c.world;
    c.world = parse_world_config(w, file);
    if (!w.has("anisotropy")) c.world.anisotropy = defaults.anisotropy;
    if (!w.has("frames_per_video")) c.world.frames_per_video = defaults.frames_per_video;
  }
  auto s = file.section("ab");
  c.seed = s.get_u64("seed", c.seed);
  const auto draws = s.get_u64("draws", c.draws_a);
  c.draws_a = s.get_u64("draws_a", draws);
  c.draws_b = s.get_u64("draws_b", draws);
  c.null_samples = static_cast<std::size_t>(s.get_u64("null_samples", c.null_samples));
  c.probes = static_cast<std::size_t>(s.get_u64("probes", c.probes));
  c.bootstrap = static_cast<std::size_t>(s.get_u64("bootstrap", c.bootstrap));
  c.shards = static_cast<unsigned>(std::max<long long>(1, s.get_int("shards", c.shards)));
  c.search.neighborhood_k = static_cast<int>(s.get_int("neighborhood_k", c.search.neighborhood_k));
  c.search.tolerance = s.get_double("tolerance", c.search.tolerance);
  c.search.anchor_limit = static_cast<std::size_t>(s.get_u64("anchor_limit", c.search.anchor_limit));
  c.search.max_attempts = static_cast<std::size_t>(s.get_u64("max_attempts", c.search.max_attempts));
  s.finish();
  return c;
}

Json AbReport::to_json() const {
  return Json{{"group_a", group_json(a)},
              {"group_b", group_json(b)},
              {"ratio_b_over_a", ratio},
              {"insufficient_sample", insufficient_sample},
              {"proxies", "rotation90 distortion against a random-permutation null; read-out of rotated probes "
                          "through the locally searched symmetry"}};
}

AbReport run_ab_experiment(const AbConfig& c) {
  if (c.draws_a != c.draws_b) {
    throw DomainError(fmt::format("ab-experiment: unequal budgets ({} vs {} draws) confound the comparison", c.draws_a,
                                  c.draws_b));
  }
  if (c.world.kind != WorldKind::edge_image) throw ConfigError("ab-experiment: needs an edge_image world");
  if (c.world.width != c.world.height) throw ConfigError("ab-experiment: rotation90 needs a square grid");
  if (!c.world.invariances.empty()) throw ConfigError("ab-experiment: groups must not be symmetrized");

  // Probes: active sets of an isotropic world on the same grid.
  WorldConfig pc = c.world;
  pc.anisotropy = 0.0;
  pc.rotation_scramble = false;
  pc.seed = stage_seed(c.seed, "probes");
  const EdgeWorld probe_world(pc);
  std::vector<NodeSet> probes;
  for (std::uint64_t i = 0; probes.size() < c.probes && i < 1000 * (c.probes + 1); ++i) {
    auto obs = probe_world.draw(i);
    if (!obs.active.empty()) probes.push_back(std::move(obs.active));
  }

  AbReport r;
  r.a = run_group(c, "A", false, c.draws_a, probes);
  r.b = run_group(c, "B", true, c.draws_b, probes);
  r.ratio = r.a.distortion > 0.0 ? r.b.distortion / r.a.distortion : 0.0;
  // The groups must be resolved from each other, not only from the null: a sparse graph puts
  // any locality-preserving map below the random-permutation null.
  const bool groups_apart = r.a.bootstrap_hi < r.b.bootstrap_lo || r.b.bootstrap_hi < r.a.bootstrap_lo;
  r.insufficient_sample = !(r.a.separable && r.b.separable && groups_apart);
  return r;
}

}  // namespace concgraph
