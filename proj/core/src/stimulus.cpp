#include "concgraph/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

namespace {

// Contours are sampled at arclength steps of 1/64 pixel; every per-sample length is then
// exactly representable, so both activation paths (count threshold and raster dot product)
// agree bit for bit.
constexpr int kSamplesPerPixel = 64;
constexpr double kStep = 1.0 / kSamplesPerPixel;

double wrap(double v, double period) { return v - period * std::floor(v / period); }

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

double quantize_length(double len) { return std::floor(len * kSamplesPerPixel) * kStep; }

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(WorldKind kind) {
  switch (kind) {
    case WorldKind::edge_image: return "edge_image";
    case WorldKind::harmonic_audio: return "harmonic_audio";
    case WorldKind::explicit_table: return "explicit_table";
  }
  return "?";
}

std::string to_string(Invariance inv) {
  switch (inv) {
    case Invariance::translation: return "translation";
    case Invariance::rotation90: return "rotation90";
    case Invariance::reflection: return "reflection";
    case Invariance::rescale: return "rescale";
    case Invariance::frequency_multiply: return "frequency_multiply";
  }
  return "?";
}

WorldKind parse_world_kind(const std::string& text) {
  if (text == "edge_image") return WorldKind::edge_image;
  if (text == "harmonic_audio") return WorldKind::harmonic_audio;
  if (text == "explicit_table") return WorldKind::explicit_table;
  throw ConfigError(fmt::format("unknown world kind '{}'", text));
}

Invariance parse_invariance(const std::string& text) {
  for (auto inv : {Invariance::translation, Invariance::rotation90, Invariance::reflection, Invariance::rescale,
                   Invariance::frequency_multiply}) {
    if (to_string(inv) == text) return inv;
  }
  throw ConfigError(fmt::format("unknown invariance '{}'", text));
}

bool WorldConfig::declares(Invariance inv) const {
  return std::find(invariances.begin(), invariances.end(), inv) != invariances.end();
}

std::size_t WorldConfig::n_detectors() const {
  switch (kind) {
    case WorldKind::edge_image: {
      std::size_t n = 0;
      for (int l = 0; l < scales; ++l) {
        n += static_cast<std::size_t>(width >> l) * static_cast<std::size_t>(height >> l) *
             static_cast<std::size_t>(orientations);
      }
      return n;
    }
    case WorldKind::harmonic_audio: return static_cast<std::size_t>(std::max(bands, 0));
    case WorldKind::explicit_table: return table ? table->n() : 0;
  }
  return 0;
}

std::string WorldConfig::canonical() const {
  std::string out;
  auto put = [&](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
  put("kind", to_string(kind));
  put("seed", seed);
  std::string invs;
  for (auto inv : invariances) invs += (invs.empty() ? "" : ",") + to_string(inv);
  put("invariances", invs);
  put("anisotropy", anisotropy);
  put("rotation_scramble", rotation_scramble);
  put("frames_per_video", frames_per_video);
  put("toroidal", toroidal);
  switch (kind) {
    case WorldKind::edge_image:
      put("width", width);
      put("height", height);
      put("orientations", orientations);
      put("scales", scales);
      put("contours_per_scene", contours_per_scene);
      put("line_probability", line_probability);
      put("min_line_length", min_line_length);
      put("max_line_length", max_line_length);
      put("min_arc_radius", min_arc_radius);
      put("max_arc_radius", max_arc_radius);
      put("min_arc_sweep_deg", min_arc_sweep_deg);
      put("max_arc_sweep_deg", max_arc_sweep_deg);
      break;
    case WorldKind::harmonic_audio:
      put("bands", bands);
      put("bands_per_octave", bands_per_octave);
      put("partials", partials);
      put("partial_decay", partial_decay);
      break;
    case WorldKind::explicit_table:
      if (table) {
        put("n", table->n());
        for (std::size_t x = 0; x < table->states(); ++x) {
          if ((*table)[x] != 0.0) put(fmt::format("p{}", x), (*table)[x]);
        }
      }
      break;
  }
  return out;
}

void validate_geometry(std::span<const DetectorGeometry> geometry) {
  std::set<std::tuple<double, double, double, int>> seen;
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const auto& g = geometry[i];
    if (g.id != i) throw DomainError(fmt::format("geometry: id {} at position {} (ids must be contiguous)", g.id, i));
    if (!seen.emplace(g.x, g.y, g.omega, g.scale_level).second) {
      throw DomainError(fmt::format("geometry: duplicate detector tuple at id {}", g.id));
    }
  }
}

Scene rotate_scene(const Scene& scene, double degrees, double px, double py) {
  const double c = std::cos(deg2rad(degrees));
  const double s = std::sin(deg2rad(degrees));
  auto rot = [&](double& x, double& y) {
    const double dx = x - px;
    const double dy = y - py;
    x = px + c * dx - s * dy;
    y = py + s * dx + c * dy;
  };
  Scene out = scene;
  for (auto& contour : out.contours) {
    std::visit(
        [&](auto& k) {
          rot(k.cx, k.cy);
          if constexpr (std::is_same_v<std::decay_t<decltype(k)>, LineContour>) {
            k.angle_deg = wrap(k.angle_deg + degrees, 180.0);
          } else {
            k.start_deg = wrap(k.start_deg + degrees, 360.0);
          }
        },
        contour);
  }
  return out;
}

// ---------------------------------------------------------------------------
// EdgeWorld
// ---------------------------------------------------------------------------

EdgeWorld::EdgeWorld(WorldConfig config) : World(std::move(config)) {
  const auto& c = config_;
  if (c.kind != WorldKind::edge_image) throw ConfigError("EdgeWorld requires world kind edge_image");
  if (c.width < 4 || c.height < 4) {
    throw ConfigError(fmt::format("edge world: grid {}x{} too small to host a co-linear triple (need >= 4x4)", c.width,
                                  c.height));
  }
  if (c.orientations < 2 || c.orientations % 2 != 0) {
    throw ConfigError("edge world: orientations must be even and >= 2 (the set must contain 0 and 90 degrees)");
  }
  if (c.scales < 1) throw ConfigError("edge world: scales must be >= 1");
  const int coarse = 1 << (c.scales - 1);
  if (c.width % coarse != 0 || c.height % coarse != 0) {
    throw ConfigError(fmt::format("edge world: width/height must be divisible by {} for {} scale levels", coarse,
                                  c.scales));
  }
  if (c.anisotropy < 0.0 || c.anisotropy > 1.0) throw ConfigError("edge world: anisotropy must lie in [0, 1]");
  if (c.contours_per_scene < 1) throw ConfigError("edge world: contours_per_scene must be >= 1");
  if (c.line_probability < 0.0 || c.line_probability > 1.0) throw ConfigError("edge world: line_probability in [0,1]");
  if (c.min_line_length <= 0.0 || c.max_line_length < c.min_line_length) throw ConfigError("edge world: bad line lengths");
  if (c.min_arc_radius <= 0.0 || c.max_arc_radius < c.min_arc_radius) throw ConfigError("edge world: bad arc radii");
  if (c.min_arc_sweep_deg <= 0.0 || c.max_arc_sweep_deg < c.min_arc_sweep_deg) throw ConfigError("edge world: bad arc sweeps");
  if (c.frames_per_video < 1) throw ConfigError("edge world: frames_per_video must be >= 1");
  if (c.declares(Invariance::frequency_multiply)) throw ConfigError("edge world: frequency_multiply is an audio invariance");
  if ((c.declares(Invariance::rotation90)) && c.width != c.height) {
    throw ConfigError("edge world: rotation90 requires a square grid");
  }

  level_offset_.assign(static_cast<std::size_t>(c.scales), 0);
  NodeId id = 0;
  for (int l = 0; l < c.scales; ++l) {
    level_offset_[static_cast<std::size_t>(l)] = id;
    for (int j = 0; j < cells_y(l); ++j) {
      for (int i = 0; i < cells_x(l); ++i) {
        for (int b = 0; b < c.orientations; ++b) {
          geometry_.push_back(DetectorGeometry{id++, static_cast<double>(i << l), static_cast<double>(j << l),
                                               180.0 * b / c.orientations, l});
        }
      }
    }
  }

  std::vector<Permutation> generators;
  if (c.declares(Invariance::rotation90)) generators.push_back(rotation90());
  if (c.declares(Invariance::reflection)) generators.push_back(reflection());
  // Translation is a group only on the torus; with hard borders it is approximate.
  if (c.declares(Invariance::translation) && c.toroidal) {
    generators.push_back(translation(coarse, 0));
    generators.push_back(translation(0, coarse));
  }
  if (!generators.empty()) {
    auto closure = generate_group(generators, 1'000'000);
    if (closure.truncated) throw ConfigError("edge world: symmetrization group too large");
    group_ = std::move(closure.elements);
  }
}

NodeId EdgeWorld::node(int level, int i, int j, int bin) const {
  return static_cast<NodeId>(level_offset_[static_cast<std::size_t>(level)] +
                             (static_cast<std::size_t>(j) * static_cast<std::size_t>(cells_x(level)) +
                              static_cast<std::size_t>(i)) *
                                 static_cast<std::size_t>(config_.orientations) +
                             static_cast<std::size_t>(bin));
}

RasterLayout EdgeWorld::raster_layout(int subpixels) const {
  return RasterLayout{config_.width, config_.height, config_.orientations, subpixels};
}

Permutation EdgeWorld::rotation90() const {
  if (config_.width != config_.height) throw DomainError("rotation90 requires a square grid");
  const int k = config_.orientations;
  std::vector<NodeId> map(n());
  for (int l = 0; l < config_.scales; ++l) {
    const int cells = cells_x(l);
    for (int j = 0; j < cells; ++j) {
      for (int i = 0; i < cells; ++i) {
        for (int b = 0; b < k; ++b) {
          map[node(l, i, j, b)] = node(l, cells - 1 - j, i, (b + k / 2) % k);
        }
      }
    }
  }
  return Permutation(std::move(map));
}

Permutation EdgeWorld::reflection() const {
  const int k = config_.orientations;
  std::vector<NodeId> map(n());
  for (int l = 0; l < config_.scales; ++l) {
    for (int j = 0; j < cells_y(l); ++j) {
      for (int i = 0; i < cells_x(l); ++i) {
        for (int b = 0; b < k; ++b) map[node(l, i, j, b)] = node(l, cells_x(l) - 1 - i, j, (k - b) % k);
      }
    }
  }
  return Permutation(std::move(map));
}

Permutation EdgeWorld::translation(int dx, int dy) const {
  if (!config_.toroidal) throw DomainError("translation permutation needs a toroidal world");
  const int coarse = 1 << (config_.scales - 1);
  if (dx % coarse != 0 || dy % coarse != 0) {
    throw DomainError(fmt::format("translation ({}, {}) is not a multiple of the coarsest cell {}", dx, dy, coarse));
  }
  std::vector<NodeId> map(n());
  for (int l = 0; l < config_.scales; ++l) {
    const int cx = cells_x(l);
    const int cy = cells_y(l);
    const int sx = dx >> l;
    const int sy = dy >> l;
    for (int j = 0; j < cy; ++j) {
      for (int i = 0; i < cx; ++i) {
        for (int b = 0; b < config_.orientations; ++b) {
          map[node(l, i, j, b)] = node(l, ((i + sx) % cx + cx) % cx, ((j + sy) % cy + cy) % cy, b);
        }
      }
    }
  }
  return Permutation(std::move(map));
}

Scene EdgeWorld::sample_scene(Rng& rng) const {
  const auto& c = config_;
  double extent = std::max(c.max_line_length / 2.0, c.max_arc_radius);
  // A rotated view must still cover the grid corners with scene content.
  if (c.rotation_scramble && !c.toroidal) extent += 0.21 * std::max(c.width, c.height);
  const double x0 = c.toroidal ? 0.0 : -extent;
  const double x1 = c.toroidal ? c.width : c.width + extent;
  const double y0 = c.toroidal ? 0.0 : -extent;
  const double y1 = c.toroidal ? c.height : c.height + extent;

  Scene scene;
  scene.contours.reserve(static_cast<std::size_t>(c.contours_per_scene));
  for (int k = 0; k < c.contours_per_scene; ++k) {
    const bool is_line = rng.bernoulli(c.line_probability);
    const double cx = rng.uniform(x0, x1);
    const double cy = rng.uniform(y0, y1);
    if (is_line) {
      const bool horizontal = rng.bernoulli(c.anisotropy);
      const double free_angle = rng.uniform(0.0, 180.0);
      const double length = quantize_length(rng.uniform(c.min_line_length, c.max_line_length));
      scene.contours.emplace_back(LineContour{cx, cy, horizontal ? 0.0 : free_angle, length});
    } else {
      const double radius = rng.uniform(c.min_arc_radius, c.max_arc_radius);
      const double start = rng.uniform(0.0, 360.0);
      const double sweep = rng.uniform(c.min_arc_sweep_deg, c.max_arc_sweep_deg);
      scene.contours.emplace_back(ArcContour{cx, cy, radius, start, sweep});
    }
  }
  return scene;
}

template <class Visit>
void EdgeWorld::trace(const Scene& scene, Visit&& visit) const {
  const auto& c = config_;
  const double bin_width = 180.0 / c.orientations;
  auto emit = [&](double px, double py, double theta) {
    if (c.toroidal) {
      px = wrap(px, c.width);
      py = wrap(py, c.height);
      if (px >= c.width) px = 0.0;
      if (py >= c.height) py = 0.0;
    } else if (px < 0.0 || py < 0.0 || px >= c.width || py >= c.height) {
      return;
    }
    const int bin = static_cast<int>(std::floor(wrap(theta, 180.0) / bin_width + 0.5)) % c.orientations;
    visit(px, py, bin);
  };
  for (const auto& contour : scene.contours) {
    if (const auto* line = std::get_if<LineContour>(&contour)) {
      const double ux = std::cos(deg2rad(line->angle_deg));
      const double uy = std::sin(deg2rad(line->angle_deg));
      const auto steps = static_cast<long>(std::floor(line->length * kSamplesPerPixel + 1e-9));
      for (long k = 0; k < steps; ++k) {
        const double s = -line->length / 2.0 + (static_cast<double>(k) + 0.5) * kStep;
        emit(line->cx + s * ux, line->cy + s * uy, line->angle_deg);
      }
    } else {
      const auto& arc = std::get<ArcContour>(contour);
      const double arclength = arc.radius * deg2rad(arc.sweep_deg);
      const auto steps = static_cast<long>(std::floor(arclength * kSamplesPerPixel));
      for (long k = 0; k < steps; ++k) {
        const double phi = deg2rad(arc.start_deg) + (static_cast<double>(k) + 0.5) * kStep / arc.radius;
        emit(arc.cx + arc.radius * std::cos(phi), arc.cy + arc.radius * std::sin(phi),
             phi * 180.0 / std::numbers::pi + 90.0);
      }
    }
  }
}

NodeSet EdgeWorld::rasterize(const Scene& scene) const {
  std::vector<std::uint32_t> counts(n(), 0);
  NodeSet touched;
  trace(scene, [&](double px, double py, int bin) {
    const int ix = static_cast<int>(px);
    const int iy = static_cast<int>(py);
    for (int l = 0; l < config_.scales; ++l) {
      const NodeId id = node(l, ix >> l, iy >> l, bin);
      if (counts[id]++ == 0) touched.push_back(id);
    }
  });
  NodeSet active;
  for (NodeId id : touched) {
    const int level = geometry_[id].scale_level;
    // covered length >= half the field side: count * kStep >= 0.5 * 2^level
    if (counts[id] >= static_cast<std::uint32_t>((kSamplesPerPixel / 2) << level)) active.push_back(id);
  }
  normalize(active);
  return active;
}

std::vector<double> EdgeWorld::render(const Scene& scene) const {
  const RasterLayout layout = raster_layout();
  std::vector<double> raster(layout.dimension(), 0.0);
  const double unit = kStep * layout.subpixels;
  trace(scene, [&](double px, double py, int bin) {
    const int sx = static_cast<int>(px * layout.subpixels);
    const int sy = static_cast<int>(py * layout.subpixels);
    raster[layout.index(sx, sy, bin)] += unit;
  });
  return raster;
}

std::vector<NodeSet> EdgeWorld::contour_labels(const Scene& scene) const {
  std::vector<NodeSet> labels;
  for (const auto& contour : scene.contours) labels.push_back(rasterize(Scene{{contour}}));
  return labels;
}

Scene EdgeWorld::scene(std::uint64_t index) const {
  Rng rng = Rng::for_draw(config_.seed, index);
  return scene(index, rng);
}

Scene EdgeWorld::scene(std::uint64_t index, Rng& rng) const {
  Scene s = sample_scene(rng);
  if (config_.rotation_scramble) {
    Rng video = Rng::for_draw(derive_seed(config_.seed, "video"), index / config_.frames_per_video);
    const double angle = video.uniform(0.0, 360.0);
    if (config_.toroidal) {
      // A rigid rotation is not defined on the torus; rotate each contour about its anchor.
      for (auto& contour : s.contours) {
        const auto [ax, ay] = std::visit([](const auto& k) { return std::pair{k.cx, k.cy}; }, contour);
        contour = rotate_scene(Scene{{contour}}, angle, ax, ay).contours.front();
      }
    } else {
      s = rotate_scene(s, angle, config_.width / 2.0, config_.height / 2.0);
    }
  }
  return s;
}

Observation EdgeWorld::draw(std::uint64_t index) const {
  Rng rng = Rng::for_draw(config_.seed, index);
  NodeSet active = rasterize(scene(index, rng));
  if (!group_.empty()) {
    const auto& g = group_[static_cast<std::size_t>(rng.below(group_.size()))];
    active = g.apply(active);
  }
  return Observation{index, std::move(active)};
}

// ---------------------------------------------------------------------------
// HarmonicWorld
// ---------------------------------------------------------------------------

HarmonicWorld::HarmonicWorld(WorldConfig config) : World(std::move(config)) {
  const auto& c = config_;
  if (c.kind != WorldKind::harmonic_audio) throw ConfigError("HarmonicWorld requires world kind harmonic_audio");
  if (c.bands < 12) throw ConfigError(fmt::format("harmonic world: {} bands; need >= 12", c.bands));
  if (c.partials < 1) throw ConfigError("harmonic world: partials must be >= 1");
  if (c.bands_per_octave < 1) throw ConfigError("harmonic world: bands_per_octave must be >= 1");
  if (c.partial_decay < 0.0 || c.partial_decay > 1.0) throw ConfigError("harmonic world: partial_decay in [0, 1]");
  for (auto inv : c.invariances) {
    if (inv != Invariance::frequency_multiply) {
      throw ConfigError(fmt::format("harmonic world: invariance '{}' not applicable", to_string(inv)));
    }
  }
  for (int b = 0; b < c.bands; ++b) geometry_.push_back(DetectorGeometry{static_cast<NodeId>(b), double(b), 0.0, 0.0, 0});
}

int HarmonicWorld::partial_offset(int k) const {
  return static_cast<int>(std::lround(config_.bands_per_octave * std::log2(static_cast<double>(k))));
}

int HarmonicWorld::fundamental(std::uint64_t index) const {
  Rng rng = Rng::for_draw(config_.seed, index);
  const int top = partial_offset(config_.partials);
  return -top + static_cast<int>(rng.below(static_cast<std::uint64_t>(config_.bands + top)));
}

Observation HarmonicWorld::draw(std::uint64_t index) const {
  Rng rng = Rng::for_draw(config_.seed, index);
  const int top = partial_offset(config_.partials);
  // Fundamentals below the axis keep the upper bands' statistics shift-invariant.
  const int base = -top + static_cast<int>(rng.below(static_cast<std::uint64_t>(config_.bands + top)));
  Observation obs{index, {}};
  for (int k = 1; k <= config_.partials; ++k) {
    const bool on = (k == 1) || rng.bernoulli(std::pow(config_.partial_decay, k - 1));
    const int band = base + partial_offset(k);
    if (on && band >= 0 && band < config_.bands) obs.active.push_back(static_cast<NodeId>(band));
  }
  normalize(obs.active);
  return obs;
}

Permutation HarmonicWorld::log_shift(int steps, NodeSet* mask) const {
  const int b = config_.bands;
  std::vector<std::int64_t> partial(static_cast<std::size_t>(b), -1);
  std::vector<bool> used(static_cast<std::size_t>(b), false);
  NodeSet masked;
  for (int i = 0; i < b; ++i) {
    const int t = i + steps;
    if (t >= 0 && t < b) {
      partial[static_cast<std::size_t>(i)] = t;
      used[static_cast<std::size_t>(t)] = true;
    } else {
      masked.push_back(static_cast<NodeId>(i));
    }
  }
  int next_free = 0;
  std::vector<NodeId> map(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    if (partial[static_cast<std::size_t>(i)] < 0) {
      while (used[static_cast<std::size_t>(next_free)]) ++next_free;
      used[static_cast<std::size_t>(next_free)] = true;
      partial[static_cast<std::size_t>(i)] = next_free;
    }
    map[static_cast<std::size_t>(i)] = static_cast<NodeId>(partial[static_cast<std::size_t>(i)]);
  }
  if (mask) *mask = std::move(masked);
  return Permutation(std::move(map));
}

// ---------------------------------------------------------------------------
// TableWorld
// ---------------------------------------------------------------------------

namespace {
const JointDistribution<double>& require_table(const WorldConfig& c) {
  if (c.kind != WorldKind::explicit_table) throw ConfigError("TableWorld requires world kind explicit_table");
  if (!c.table) throw ConfigError("explicit_table world: no table given");
  if (!c.invariances.empty()) {
    throw ConfigError("explicit_table world: invariances are properties of the table, not generator settings");
  }
  return *c.table;
}
}  // namespace

TableWorld::TableWorld(WorldConfig config) : World(std::move(config)), sampler_(require_table(config_)) {
  for (std::size_t i = 0; i < config_.table->n(); ++i) {
    geometry_.push_back(DetectorGeometry{static_cast<NodeId>(i), static_cast<double>(i), 0.0, 0.0, 0});
  }
}

Observation TableWorld::draw(std::uint64_t index) const {
  Rng rng = Rng::for_draw(config_.seed, index);
  const State x = sampler_(rng);
  Observation obs{index, {}};
  for (std::size_t i = 0; i < sampler_.n(); ++i) {
    if ((x >> i) & 1U) obs.active.push_back(static_cast<NodeId>(i));
  }
  return obs;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const World> make_world(const WorldConfig& config) {
  switch (config.kind) {
    case WorldKind::edge_image: return std::make_shared<EdgeWorld>(config);
    case WorldKind::harmonic_audio: return std::make_shared<HarmonicWorld>(config);
    case WorldKind::explicit_table: return std::make_shared<TableWorld>(config);
  }
  throw ConfigError("unknown world kind");
}

std::vector<Observation> ObservationStream::sample(std::size_t count) {
  std::vector<Observation> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(world_->draw(cursor_ + i));
  cursor_ += count;
  return out;
}

PairRelation classify_pair(const DetectorGeometry& a, const DetectorGeometry& b) {
  const double ax = a.x + a.lambda() / 2.0;
  const double ay = a.y + a.lambda() / 2.0;
  const double bx = b.x + b.lambda() / 2.0;
  const double by = b.y + b.lambda() / 2.0;
  if (ax == bx && ay == by) throw DomainError("classify_pair: detectors share a position");
  const double chord = wrap(std::atan2(by - ay, bx - ax) * 180.0 / std::numbers::pi, 180.0);
  auto near_zero_mod180 = [](double v) {
    const double r = wrap(v, 180.0);
    return r < 1e-6 || r > 180.0 - 1e-6;
  };
  if (near_zero_mod180(a.omega - chord) && near_zero_mod180(b.omega - chord)) return PairRelation::colinear;
  if (near_zero_mod180(a.omega + b.omega - 2.0 * chord)) return PairRelation::cocircular;
  return PairRelation::unrelated;
}

}  // namespace concgraph
