#include "concgraph/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <optional>

#include <fmt/format.h>

#include "concgraph/digest.hpp"
#include "concgraph/error.hpp"
#include "concgraph/features.hpp"

#ifndef CONCGRAPH_VERSION
#define CONCGRAPH_VERSION "0.0.0"
#endif

namespace concgraph {

namespace {

// Training inputs come from a draw range disjoint from the observation draws.
constexpr std::uint64_t kTrainingOffset = std::uint64_t{1} << 40;

std::string to_string(LearningMode m) { return m == LearningMode::sequential ? "sequential" : "interleaved"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string file_label(const std::string& label) {
  std::string s;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-') {
      s.push_back(ch);
    } else if (!s.empty() && s.back() != '_') {
      s.push_back('_');
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

}  // namespace

std::string library_version() { return CONCGRAPH_VERSION; }

// ---------------------------------------------------------------------------

WorldConfig PipelineConfig::seeded_world() const {
  WorldConfig w = world;
  w.seed = stage_seed(seed, "stimulus");
  return w;
}

std::vector<Family> PipelineConfig::effective_families() const {
  if (!families.empty() || learn) return families;
  std::vector<Family> out;
  for (auto inv : world.invariances) {
    switch (inv) {
      case Invariance::translation: out.push_back(Family::translation); break;
      case Invariance::rotation90: out.push_back(Family::rotation90); break;
      case Invariance::reflection: out.push_back(Family::reflection); break;
      case Invariance::rescale: out.push_back(Family::rescale); break;
      case Invariance::frequency_multiply: out.push_back(Family::log_shift); break;
    }
  }
  return out;
}

std::string PipelineConfig::canonical() const {
  std::string out = "[world]\n" + seeded_world().canonical() + "[pipeline]\n";
  auto put = [&](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
  put("seed", seed);
  put("draws", draws);
  put("transform", to_string(transform));
  put("learn", learn);
  if (learn) {
    put("learning_mode", to_string(learning_mode));
    put("bank_size", bank_size);
    put("learn_steps", learn_steps);
    put("learn_rate", learn_rate);
    put("threshold", threshold);
  }
  std::string fams;
  for (auto f : effective_families()) fams += (fams.empty() ? "" : ",") + to_string(f);
  put("families", fams);
  put("dx", family_params.dx);
  put("dy", family_params.dy);
  put("steps", family_params.steps);
  put("mask_borders", mask_borders);
  put("null_samples", null_samples);
  put("homogeneity_tolerance", homogeneity_tolerance);
  put("write_observations", write_observations);
  // shards is deliberately absent: it changes scheduling, never results.
  return out;
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical()); }

PipelineConfig parse_pipeline_config(const ConfigFile& file) {
  file.check_sections({"world", "pipeline"});
  PipelineConfig c;
  auto w = file.section("world");
  c.world = parse_world_config(w, file);
  auto s = file.section("pipeline");
  c.seed = s.get_u64("seed", c.seed);
  c.draws = s.get_u64("draws", c.draws);
  c.transform = parse_weight_transform(s.get_string("transform", to_string(c.transform)));
  c.shards = static_cast<unsigned>(std::max<long long>(1, s.get_int("shards", c.shards)));
  c.learn = s.get_bool("learn", c.learn);
  const auto mode = s.get_string("learning_mode", to_string(c.learning_mode));
  if (mode == "sequential") {
    c.learning_mode = LearningMode::sequential;
  } else if (mode == "interleaved") {
    c.learning_mode = LearningMode::interleaved;
  } else {
    throw ConfigError(fmt::format("[pipeline] learning_mode: unknown mode '{}'", mode));
  }
  c.bank_size = static_cast<std::size_t>(s.get_u64("bank_size", c.bank_size));
  c.learn_steps = s.get_u64("learn_steps", c.learn_steps);
  c.learn_rate = s.get_double("learn_rate", c.learn_rate);
  c.threshold = s.get_double("threshold", c.threshold);
  for (const auto& f : s.get_list("families", {})) {
    try {
      c.families.push_back(parse_family(f));
    } catch (const Error& e) {
      throw ConfigError(fmt::format("[pipeline] families: {}", e.what()));
    }
  }
  c.family_params.dx = static_cast<int>(s.get_int("dx", c.family_params.dx));
  c.family_params.dy = static_cast<int>(s.get_int("dy", c.family_params.dy));
  c.family_params.steps = static_cast<int>(s.get_int("steps", c.family_params.steps));
  c.family_params.toroidal = c.world.toroidal;
  c.mask_borders = s.get_bool("mask_borders", c.mask_borders);
  c.null_samples = static_cast<std::size_t>(s.get_u64("null_samples", c.null_samples));
  c.homogeneity_tolerance = s.get_double("homogeneity_tolerance", c.homogeneity_tolerance);
  c.write_observations = s.get_bool("write_observations", c.write_observations);
  s.finish();
  if (!(c.learn_rate > 0.0)) throw ConfigError("[pipeline] learn_rate must be > 0");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) throw ConfigError("[pipeline] threshold must lie in (0, 1]");
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(ConfigFile::load(path));
}

// ---------------------------------------------------------------------------

Json ExperimentManifest::to_json() const {
  Json j;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["config_hash"] = config_hash;
  j["master_seed"] = master_seed;
  j["seeds"] = seeds;
  j["versions"] = versions;
  Json t = Json::array();
  for (const auto& [stage, s] : timings) t.push_back(Json{{"stage", stage}, {"seconds", s}});
  j["timings"] = t;
  Json o = Json::array();
  for (const auto& f : outputs) o.push_back(Json{{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["outputs"] = o;
  j["digest"] = digest();
  return j;
}

ExperimentManifest ExperimentManifest::from_json(const Json& j) {
  ExperimentManifest m;
  try {
    m.status = j.at("status").get<std::string>();
    m.error = j.value("error", std::string());
    m.config_hash = j.at("config_hash").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.versions = j.at("versions").get<std::map<std::string, std::string>>();
    for (const auto& t : j.at("timings")) m.timings.emplace_back(t.at("stage").get<std::string>(), t.at("seconds").get<double>());
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back(
          OutputFile{o.at("path").get<std::string>(), o.at("sha256").get<std::string>(), o.at("bytes").get<std::uintmax_t>()});
    }
  } catch (const Json::exception& e) {
    throw IoError(fmt::format("malformed manifest: {}", e.what()));
  }
  return m;
}

std::string ExperimentManifest::digest() const {
  std::string text = fmt::format("config_hash {}\nmaster_seed {}\n", config_hash, master_seed);
  for (const auto& [k, v] : seeds) text += fmt::format("seed {} {}\n", k, v);
  for (const auto& [k, v] : versions) text += fmt::format("version {} {}\n", k, v);
  for (const auto& f : outputs) text += fmt::format("output {} {}\n", f.path, f.sha256);
  return sha256_hex(text);
}

ArtifactWriter::ArtifactWriter(std::filesystem::path root, ExperimentManifest& manifest)
    : root_(std::move(root)), manifest_(manifest) {}

void ArtifactWriter::text(const std::string& relative, const std::string& content) {
  write(relative, [&](std::ostream& out) { out << content; });
}

void ArtifactWriter::json(const std::string& relative, const Json& content) { text(relative, content.dump(2) + "\n"); }

void ArtifactWriter::record(const std::string& relative) {
  const auto path = root_ / relative;
  manifest_.outputs.push_back(OutputFile{relative, to_hex(sha256_file(path)), std::filesystem::file_size(path)});
}

// ---------------------------------------------------------------------------

std::vector<SymmetryReport> score_families(const ConcurrenceGraph& graph, std::span<const DetectorGeometry> geometry,
                                           std::span<const Family> families, const FamilyParams& params,
                                           bool mask_borders, std::size_t null_samples, std::uint64_t seed) {
  const GraphView view(graph);
  std::map<NodeSet, NullDistribution> nulls;
  std::vector<SymmetryReport> reports;
  for (auto family : families) {
    auto candidate = geometric_candidate(geometry, family, params);
    if (!mask_borders) candidate.border_mask.clear();
    const NullDistribution* null = nullptr;
    if (null_samples > 0) {
      auto it = nulls.find(candidate.border_mask);
      if (it == nulls.end()) {
        it = nulls.emplace(candidate.border_mask,
                           random_permutation_null(view, candidate.border_mask, null_samples, seed)).first;
      }
      null = &it->second;
    }
    reports.push_back(score(view, candidate, null));
  }
  return reports;
}

StimulusOutput run_stimulus(const PipelineConfig& c, const World& world) {
  StimulusOutput out;
  if (!c.learn) {
    out.observations.reserve(c.draws);
    for (std::uint64_t i = 0; i < c.draws; ++i) out.observations.push_back(world.draw(i));
    return out;
  }
  const auto* edge = dynamic_cast<const EdgeWorld*>(&world);
  if (!edge) throw ConfigError("[pipeline] learn requires an edge_image world (raw raster input)");
  const std::size_t bank_size = c.bank_size ? c.bank_size : world.n();
  Rng rng(stage_seed(c.seed, "features"));

  std::vector<std::vector<double>> init;
  for (std::uint64_t i = 0; init.size() < 4 * bank_size && i < 64 * bank_size; ++i) {
    auto x = edge->render(edge->scene(kTrainingOffset + i));
    if (std::any_of(x.begin(), x.end(), [](double v) { return v != 0.0; })) init.push_back(std::move(x));
  }
  DetectorBank bank = DetectorBank::from_samples(init, bank_size, c.learn_rate, rng);

  if (c.learning_mode == LearningMode::sequential) {
    for (std::uint64_t i = 0; i < c.learn_steps; ++i) bank.train_step(edge->render(edge->scene(kTrainingOffset + i)));
    for (std::uint64_t i = 0; i < c.draws; ++i) {
      out.observations.push_back(activate(bank, edge->render(edge->scene(i)), c.threshold, i));
    }
  } else {
    for (std::uint64_t i = 0; i < c.draws; ++i) {
      const auto x = edge->render(edge->scene(i));
      bank.train_step(x);
      out.observations.push_back(activate(bank, x, c.threshold, i));
    }
  }
  out.bank = std::move(bank);
  return out;
}

std::vector<Observation> pipeline_observations(const PipelineConfig& config) {
  const auto world = make_world(config.seeded_world());
  return run_stimulus(config, *world).observations;
}

ExperimentManifest run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  ExperimentManifest manifest;
  manifest.config_hash = config.hash();
  manifest.master_seed = config.seed;
  for (const char* stage : {"stimulus", "features", "symmetry"}) manifest.seeds[stage] = stage_seed(config.seed, stage);
  manifest.versions = {{"concgraph", library_version()},
                       {"observations_format", "1"},
                       {"graph_format", "1"},
                       {"manifest_format", "1"}};
  ArtifactWriter out(out_dir, manifest);
  auto write_manifest = [&] { write_text(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n"); };

  try {
    out.text("config.txt", config.canonical());

    auto t0 = std::chrono::steady_clock::now();
    const auto world = make_world(config.seeded_world());
    auto stimulus = run_stimulus(config, *world);
    const bool has_geometry = !stimulus.bank;
    const std::size_t n = stimulus.bank ? stimulus.bank->size() : world->n();
    if (has_geometry) {
      out.write("geometry.csv", [&](std::ostream& s) { write_geometry_csv(s, world->geometry()); });
    }
    if (config.write_observations) {
      ObservationRun run{n, manifest.config_hash, stimulus.observations};
      out.write("observations.csv", [&](std::ostream& s) { write_observations_csv(s, run); });
      out.write("observations.bin", [&](std::ostream& s) { write_observations_binary(s, run); }, true);
    }
    manifest.timings.emplace_back("stimulus", seconds_since(t0));

    if (stimulus.bank) {
      t0 = std::chrono::steady_clock::now();
      out.write("bank.csv", [&](std::ostream& s) { write_bank_csv(s, *stimulus.bank); });
      Json summary{{"mode", to_string(config.learning_mode)},
                   {"detectors", stimulus.bank->size()},
                   {"dimension", stimulus.bank->dimension()},
                   {"zero_inputs", stimulus.bank->zero_inputs()}};
      out.json("features.json", summary);
      manifest.timings.emplace_back("features", seconds_since(t0));
    }

    t0 = std::chrono::steady_clock::now();
    ConcurrenceGraph graph(n, config.transform);
    graph.record(stimulus.observations);
    out.write("graph.csv", [&](std::ostream& s) { write_graph_csv(s, graph, manifest.config_hash); });
    out.write("graph.graphml", [&](std::ostream& s) {
      write_graphml(s, graph, manifest.config_hash,
                    has_geometry ? world->geometry() : std::span<const DetectorGeometry>{});
    });
    if (graph.total() > 0) {
      out.json("homogeneity.json", to_json(graph.marginal_homogeneity(config.homogeneity_tolerance)));
    }
    manifest.timings.emplace_back("concurrence", seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    const auto families = config.effective_families();
    Json symmetry{{"families", Json::array()}, {"null_samples", config.null_samples}, {"mask_borders", config.mask_borders}};
    if (!families.empty()) {
      if (!has_geometry) throw ConfigError("[pipeline] families need detector geometry (not available for a learned bank)");
      const auto reports = score_families(graph, world->geometry(), families, config.family_params, config.mask_borders,
                                          config.null_samples, stage_seed(config.seed, "symmetry"));
      for (const auto& r : reports) {
        auto j = to_json(r);
        j.erase("permutation");
        j["permutation_file"] = "perm_" + file_label(r.label) + ".csv";
        symmetry["families"].push_back(j);
        out.write(j["permutation_file"].get<std::string>(), [&](std::ostream& s) { write_permutation_csv(s, r.permutation); });
      }
    }
    out.json("symmetry.json", symmetry);
    manifest.timings.emplace_back("symmetry", seconds_since(t0));

    manifest.status = "ok";
    write_manifest();
    return manifest;
  } catch (const std::exception& e) {
    manifest.status = "failed";
    manifest.error = e.what();
    try {
      write_manifest();
    } catch (const std::exception&) {
      // The original error is more useful than a secondary write failure.
    }
    throw;
  }
}

}  // namespace concgraph
