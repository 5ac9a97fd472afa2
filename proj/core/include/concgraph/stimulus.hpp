#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "concgraph/marginals.hpp"
#include "concgraph/permutation.hpp"

namespace concgraph {

/// Geometric metadata of one detector.
///
/// Edge world: (x, y) is the lower-left pixel of the receptive field, omega the preferred
/// orientation in degrees, and `scale_level` l gives a square field of side 2^l pixels.
/// Harmonic world: x is the band index on the log-frequency axis, everything else zero.
struct DetectorGeometry {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;
  double omega = 0.0;
  int scale_level = 0;

  double lambda() const { return static_cast<double>(1 << scale_level); }
  friend bool operator==(const DetectorGeometry&, const DetectorGeometry&) = default;
};

/// Checks unique contiguous ids and unique (x, y, omega, level) tuples.
void validate_geometry(std::span<const DetectorGeometry> geometry);

/// One snapshot: the detectors that are on. `active` is sorted.
struct Observation {
  std::uint64_t timestamp = 0;
  NodeSet active;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class WorldKind { edge_image, harmonic_audio, explicit_table };
enum class Invariance { translation, rotation90, reflection, rescale, frequency_multiply };

std::string to_string(WorldKind kind);
std::string to_string(Invariance inv);
WorldKind parse_world_kind(const std::string& text);
Invariance parse_invariance(const std::string& text);

struct WorldConfig {
  WorldKind kind = WorldKind::edge_image;
  std::uint64_t seed = 0;
  std::vector<Invariance> invariances;
  double anisotropy = 0.0;
  bool rotation_scramble = false;
  /// Draws sharing one scramble angle (one "video").
  std::uint32_t frames_per_video = 1;
  bool toroidal = false;

  // edge_image
  int width = 16;
  int height = 16;
  int orientations = 2;
  int scales = 1;
  int contours_per_scene = 2;
  double line_probability = 0.6;
  double min_line_length = 3.0;
  double max_line_length = 10.0;
  double min_arc_radius = 1.5;
  double max_arc_radius = 6.0;
  double min_arc_sweep_deg = 60.0;
  double max_arc_sweep_deg = 240.0;

  // harmonic_audio
  int bands = 48;
  int bands_per_octave = 12;
  int partials = 4;
  double partial_decay = 0.7;

  // explicit_table
  std::optional<JointDistribution<double>> table;
  std::string table_path;

  bool declares(Invariance inv) const;
  /// Number of detectors implied by the world kind and its geometry settings.
  std::size_t n_detectors() const;
  /// Canonical `key = value` rendering; hashing this gives the config hash.
  std::string canonical() const;
};

// ---------------------------------------------------------------------------
// Edge world latent scenes
// ---------------------------------------------------------------------------

struct LineContour {
  double cx = 0.0, cy = 0.0;  // midpoint
  double angle_deg = 0.0;     // direction in [0, 180)
  double length = 0.0;
};

struct ArcContour {
  double cx = 0.0, cy = 0.0;  // circle center
  double radius = 0.0;
  double start_deg = 0.0;
  double sweep_deg = 0.0;
};

using Contour = std::variant<LineContour, ArcContour>;

struct Scene {
  std::vector<Contour> contours;
};

/// Rotates every contour by `degrees` counter-clockwise about (px, py).
Scene rotate_scene(const Scene& scene, double degrees, double px, double py);

/// Sub-pixel orientation-channel raster of a scene, the raw input for the features module.
struct RasterLayout {
  int width = 0;          // pixels
  int height = 0;
  int orientations = 0;
  int subpixels = 2;      // per pixel side

  std::size_t dimension() const {
    return static_cast<std::size_t>(width * subpixels) * static_cast<std::size_t>(height * subpixels) *
           static_cast<std::size_t>(orientations);
  }
  std::size_t index(int sx, int sy, int bin) const {
    return (static_cast<std::size_t>(sy) * static_cast<std::size_t>(width * subpixels) + static_cast<std::size_t>(sx)) *
               static_cast<std::size_t>(orientations) +
           static_cast<std::size_t>(bin);
  }
};

// ---------------------------------------------------------------------------
// Worlds
// ---------------------------------------------------------------------------

/// A seeded generator of i.i.d. observations. `draw(i)` is a pure function of (config, i).
class World {
 public:
  virtual ~World() = default;

  const WorldConfig& config() const noexcept { return config_; }
  std::span<const DetectorGeometry> geometry() const noexcept { return geometry_; }
  std::size_t n() const noexcept { return geometry_.size(); }

  virtual Observation draw(std::uint64_t index) const = 0;

  /// Elements of the symmetrization group (identity included); empty when none applies.
  std::span<const Permutation> symmetrization_group() const noexcept { return group_; }

 protected:
  explicit World(WorldConfig config) : config_(std::move(config)) {}

  WorldConfig config_;
  std::vector<DetectorGeometry> geometry_;
  std::vector<Permutation> group_;
};

class EdgeWorld final : public World {
 public:
  explicit EdgeWorld(WorldConfig config);

  Observation draw(std::uint64_t index) const override;

  /// Latent scene of draw `index`, after any rotation scramble and before symmetrization.
  Scene scene(std::uint64_t index) const;
  /// Detectors whose receptive field is covered by at least half its side length of
  /// contour in the detector's orientation bin.
  NodeSet rasterize(const Scene& scene) const;
  /// Raw sub-pixel raster; entry = contour length in the sub-pixel (in sub-pixel units).
  std::vector<double> render(const Scene& scene) const;
  /// Nodes belonging to each contour of `scene`, one set per contour.
  std::vector<NodeSet> contour_labels(const Scene& scene) const;

  RasterLayout raster_layout(int subpixels = 2) const;
  /// Node id of the detector at level `level`, cell (i, j), orientation bin `bin`.
  NodeId node(int level, int i, int j, int bin) const;
  int cells_x(int level) const { return config_.width >> level; }
  int cells_y(int level) const { return config_.height >> level; }

  /// Detector permutation induced by the declared transformations.
  Permutation rotation90() const;
  Permutation reflection() const;
  Permutation translation(int dx, int dy) const;  // toroidal only

 private:
  Scene sample_scene(Rng& rng) const;
  Scene scene(std::uint64_t index, Rng& rng) const;
  template <class Visit>
  void trace(const Scene& scene, Visit&& visit) const;

  std::vector<std::size_t> level_offset_;
};

class HarmonicWorld final : public World {
 public:
  explicit HarmonicWorld(WorldConfig config);

  Observation draw(std::uint64_t index) const override;

  /// Band offset of partial k (k >= 1) on the log-frequency axis.
  int partial_offset(int k) const;
  /// Fundamental band of draw `index` (may be negative: only upper partials in range).
  int fundamental(std::uint64_t index) const;
  /// Shift of every band by `steps` on the log-frequency axis; bands without image are
  /// mapped to the vacated bands and listed in `mask`.
  Permutation log_shift(int steps, NodeSet* mask = nullptr) const;
};

class TableWorld final : public World {
 public:
  explicit TableWorld(WorldConfig config);

  Observation draw(std::uint64_t index) const override;

 private:
  StateSampler sampler_;
};

/// Builds the world for `config.kind`; throws ConfigError on invalid settings.
std::shared_ptr<const World> make_world(const WorldConfig& config);

/// Cursor over a world's draws. `sample(count)` returns draws [cursor, cursor + count).
class ObservationStream {
 public:
  explicit ObservationStream(std::shared_ptr<const World> world, std::uint64_t start = 0)
      : world_(std::move(world)), cursor_(start) {}

  std::vector<Observation> sample(std::size_t count);
  std::uint64_t cursor() const noexcept { return cursor_; }
  const World& world() const noexcept { return *world_; }

 private:
  std::shared_ptr<const World> world_;
  std::uint64_t cursor_;
};

/// Geometric relation of two edge detectors.
enum class PairRelation { colinear, cocircular, unrelated };

/// Colinear: same orientation along the chord. Cocircular: one circle is tangent to both
/// (orientation sum equals twice the chord angle, mod 180). Detectors must differ in position.
PairRelation classify_pair(const DetectorGeometry& a, const DetectorGeometry& b);

}  // namespace concgraph
