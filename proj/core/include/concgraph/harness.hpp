#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concgraph/concurrence.hpp"
#include "concgraph/config.hpp"
#include "concgraph/features.hpp"
#include "concgraph/io.hpp"
#include "concgraph/stimulus.hpp"
#include "concgraph/symmetry.hpp"

namespace concgraph {

std::string library_version();

/// Per-stage seed fanned out from the master seed.
inline std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) { return derive_seed(master, stage); }

enum class LearningMode { sequential, interleaved };

struct PipelineConfig {
  WorldConfig world;  // world.seed is overwritten with the stimulus stage seed
  std::uint64_t seed = 1;
  std::uint64_t draws = 10'000;
  WeightTransform transform = WeightTransform::identity;
  unsigned shards = 1;

  bool learn = false;
  LearningMode learning_mode = LearningMode::sequential;
  std::size_t bank_size = 0;  // 0: one detector per predefined edge detector
  std::uint64_t learn_steps = 2'000;
  double learn_rate = 0.05;
  double threshold = 0.9;

  /// Empty: derived from the world's declared invariances.
  std::vector<Family> families;
  FamilyParams family_params;
  bool mask_borders = true;
  std::size_t null_samples = 1'000;
  double homogeneity_tolerance = 0.02;
  bool write_observations = true;

  /// World config with its seed set from the master seed.
  WorldConfig seeded_world() const;
  std::vector<Family> effective_families() const;
  std::string canonical() const;
  std::string hash() const;
};

/// Reads [world] and [pipeline].
PipelineConfig parse_pipeline_config(const ConfigFile& file);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct ExperimentManifest {
  std::string status = "running";  // "ok" or "failed" once finished
  std::string error;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> versions;
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
  std::vector<OutputFile> outputs;

  Json to_json() const;
  static ExperimentManifest from_json(const Json& j);
  /// Digest over config hash, seeds and the output inventory; timings are excluded.
  std::string digest() const;
};

/// Writes files under `root` and records each one with its digest in the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path root, ExperimentManifest& manifest);

  template <class Fn>
  void write(const std::string& relative, Fn&& fn, bool binary = false) {
    const auto path = root_ / relative;
    with_output(path, std::forward<Fn>(fn), binary);
    record(relative);
  }
  void text(const std::string& relative, const std::string& content);
  void json(const std::string& relative, const Json& content);
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  void record(const std::string& relative);

  std::filesystem::path root_;
  ExperimentManifest& manifest_;
};

/// stimulus -> (features) -> concurrence -> symmetry, writing every artifact and
/// `manifest.json` under `out_dir`. On failure the manifest is written with status
/// "failed" and the error is rethrown.
ExperimentManifest run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

struct StimulusOutput {
  std::vector<Observation> observations;
  std::optional<DetectorBank> bank;  // set on the learned path
};

/// Stimulus stage on an already built world (features included when `config.learn`).
StimulusOutput run_stimulus(const PipelineConfig& config, const World& world);

/// Observations of the pipeline's stimulus stage (learned bank path included).
std::vector<Observation> pipeline_observations(const PipelineConfig& config);

/// Symmetry stage on an existing graph: one report per family, nulls shared per mask.
std::vector<SymmetryReport> score_families(const ConcurrenceGraph& graph, std::span<const DetectorGeometry> geometry,
                                           std::span<const Family> families, const FamilyParams& params,
                                           bool mask_borders, std::size_t null_samples, std::uint64_t seed);

}  // namespace concgraph
