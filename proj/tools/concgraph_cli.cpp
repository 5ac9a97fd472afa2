// concgraph: command line front end over the harness.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 config, 4 io, 5 domain, 6 undecodable.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "concgraph/appendix.hpp"
#include "concgraph/digest.hpp"
#include "concgraph/error.hpp"
#include "concgraph/experiment.hpp"
#include "concgraph/harness.hpp"
#include "concgraph/io.hpp"
#include "concgraph/readout.hpp"

namespace fs = std::filesystem;
using namespace concgraph;

namespace {

constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool json = false;
};

/// Collects the files a subcommand wrote plus its result record for the summary.
struct Summary {
  std::string command;
  ExperimentManifest manifest;
  Json result = Json::object();
  std::vector<std::string> lines;  // human readable output
};

std::string error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::domain: return "domain";
    case ErrorKind::undecodable: return "undecodable";
  }
  return "unknown";
}

/// [world] from `world_file`, else the pipeline config from --config, else defaults.
PipelineConfig base_config(const Globals& g, const std::string& world_file) {
  PipelineConfig c;
  if (!g.config.empty()) c = load_pipeline_config(g.config);
  if (!world_file.empty()) {
    const auto file = ConfigFile::load(world_file);
    file.check_sections({"world"});
    auto section = file.section("world");
    c.world = parse_world_config(section, file);
    c.family_params.toroidal = c.world.toroidal;
  }
  if (g.seed) c.seed = *g.seed;
  return c;
}

bool is_binary_path(const fs::path& p) { return p.extension() == ".bin"; }

ObservationRun load_observations(const fs::path& path) {
  const bool binary = is_binary_path(path);
  return with_input(
      path, [&](std::istream& in) { return binary ? read_observations_binary(in) : read_observations_csv(in); }, binary);
}

void write_observations(ArtifactWriter& out, const ObservationRun& run, const std::string& format) {
  if (format == "csv" || format == "both") {
    out.write("observations.csv", [&](std::ostream& s) { write_observations_csv(s, run); });
  }
  if (format == "binary" || format == "both") {
    out.write("observations.bin", [&](std::ostream& s) { write_observations_binary(s, run); }, true);
  }
}

void check_choice(const std::string& what, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  throw ConfigError(fmt::format("{}: unknown value '{}'", what, value));
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string world;
  std::optional<std::uint64_t> draws;
  std::string format = "csv";
};

void cmd_generate(const Globals& g, const GenerateArgs& a, Summary& s) {
  check_choice("--format", a.format, {"csv", "binary", "both"});
  auto c = base_config(g, a.world);
  if (a.draws) c.draws = *a.draws;
  c.learn = false;
  const auto world = make_world(c.seeded_world());
  ArtifactWriter out(g.out_dir, s.manifest);
  const auto stimulus = run_stimulus(c, *world);
  out.write("geometry.csv", [&](std::ostream& o) { write_geometry_csv(o, world->geometry()); });
  write_observations(out, ObservationRun{world->n(), c.hash(), stimulus.observations}, a.format);
  std::size_t active = 0;
  for (const auto& obs : stimulus.observations) active += obs.active.size();
  s.result = Json{{"world", to_string(c.world.kind)},
                  {"n", world->n()},
                  {"draws", c.draws},
                  {"mean_active", c.draws ? static_cast<double>(active) / static_cast<double>(c.draws) : 0.0},
                  {"config_hash", c.hash()}};
  s.lines.push_back(fmt::format("generated {} draws over {} detectors", c.draws, world->n()));
}

struct LearnArgs {
  std::string world;
  std::optional<std::uint64_t> steps;
  std::optional<double> rate;
  std::optional<double> threshold;
  std::optional<std::size_t> bank_size;
  std::optional<std::uint64_t> draws;
  std::string mode;
};

void cmd_learn(const Globals& g, const LearnArgs& a, Summary& s) {
  auto c = base_config(g, a.world);
  c.learn = true;
  if (a.steps) c.learn_steps = *a.steps;
  if (a.rate) c.learn_rate = *a.rate;
  if (a.threshold) c.threshold = *a.threshold;
  if (a.bank_size) c.bank_size = *a.bank_size;
  if (a.draws) c.draws = *a.draws;
  if (!a.mode.empty()) {
    check_choice("--mode", a.mode, {"sequential", "interleaved"});
    c.learning_mode = a.mode == "sequential" ? LearningMode::sequential : LearningMode::interleaved;
  }
  if (!(c.learn_rate > 0.0)) throw ConfigError("--rate must be > 0");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) throw ConfigError("--threshold must lie in (0, 1]");

  const auto world = make_world(c.seeded_world());
  auto stimulus = run_stimulus(c, *world);
  ArtifactWriter out(g.out_dir, s.manifest);
  out.write("bank.csv", [&](std::ostream& o) { write_bank_csv(o, *stimulus.bank); });
  write_observations(out, ObservationRun{stimulus.bank->size(), c.hash(), stimulus.observations}, "csv");
  std::size_t silent = 0;
  for (const auto& obs : stimulus.observations) silent += obs.active.empty();
  s.result = Json{{"detectors", stimulus.bank->size()},
                  {"dimension", stimulus.bank->dimension()},
                  {"steps", c.learning_mode == LearningMode::sequential ? c.learn_steps : c.draws},
                  {"rate", c.learn_rate},
                  {"threshold", c.threshold},
                  {"zero_inputs", stimulus.bank->zero_inputs()},
                  {"silent_draws", silent},
                  {"config_hash", c.hash()}};
  out.json("features.json", s.result);
  s.lines.push_back(fmt::format("learned {} detectors of dimension {}", stimulus.bank->size(), stimulus.bank->dimension()));
}

struct GraphArgs {
  std::string observations;
  std::string geometry;
  std::string transform = "identity";
  double tolerance = 0.02;
};

void cmd_graph(const Globals& g, const GraphArgs& a, Summary& s) {
  const auto run = load_observations(a.observations);
  ConcurrenceGraph graph(run.n, parse_weight_transform(a.transform));
  graph.record(run.records);
  std::vector<DetectorGeometry> geometry;
  if (!a.geometry.empty()) {
    geometry = with_input(a.geometry, [](std::istream& in) { return read_geometry_csv(in); });
    if (geometry.size() != run.n) {
      throw DomainError(fmt::format("geometry has {} detectors, observations have {}", geometry.size(), run.n));
    }
  }
  ArtifactWriter out(g.out_dir, s.manifest);
  out.write("graph.csv", [&](std::ostream& o) { write_graph_csv(o, graph, run.config_hash); });
  out.write("graph.graphml", [&](std::ostream& o) { write_graphml(o, graph, run.config_hash, geometry); });
  s.result = Json{{"n", graph.n()}, {"draws", graph.total()}, {"transform", to_string(graph.transform())},
                  {"edges", graph.weights().size()}};
  if (graph.total() > 0) {
    const auto h = to_json(graph.marginal_homogeneity(a.tolerance));
    out.json("homogeneity.json", h);
    s.result["homogeneity"] = h;
  }
  s.lines.push_back(fmt::format("graph: {} nodes, {} edges, N = {}", graph.n(), graph.weights().size(), graph.total()));
}

struct SymmetryArgs {
  std::string graph;
  std::string geometry;
  std::vector<std::string> families;
  std::size_t null_samples = 1000;
  bool mask_borders = true;
  int dx = 1;
  int dy = 0;
  int steps = 1;
  bool toroidal = false;
  std::vector<std::string> seed_pairs;  // "u:v" pairs forming one seed set
  double tolerance = LocalSearchOptions{}.tolerance;
  int neighborhood_k = 1;
};

std::vector<SeedPair> parse_seed_pairs(const std::vector<std::string>& items) {
  std::vector<SeedPair> out;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      out.push_back(SeedPair{static_cast<NodeId>(std::stoul(item.substr(0, colon))),
                             static_cast<NodeId>(std::stoul(item.substr(colon + 1)))});
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("--seed-pair: expected u:v, got '{}'", item));
    }
  }
  return out;
}

void cmd_symmetry(const Globals& g, const SymmetryArgs& a, Summary& s) {
  std::string config_hash;
  const auto graph = with_input(a.graph, [&](std::istream& in) { return read_graph_csv(in, &config_hash); });
  const auto geometry = with_input(a.geometry, [](std::istream& in) { return read_geometry_csv(in); });
  if (geometry.size() != graph.n()) {
    throw DomainError(fmt::format("geometry has {} detectors, graph has {}", geometry.size(), graph.n()));
  }
  std::vector<Family> families;
  for (const auto& f : a.families) families.push_back(parse_family(f));
  const FamilyParams params{a.dx, a.dy, a.steps, a.toroidal};
  const std::uint64_t seed = stage_seed(g.seed.value_or(PipelineConfig{}.seed), "symmetry");
  const auto reports = score_families(graph, geometry, families, params, a.mask_borders, a.null_samples, seed);

  ArtifactWriter out(g.out_dir, s.manifest);
  Json list = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    auto j = to_json(r);
    j.erase("permutation");
    j["permutation_file"] = "perm_" + to_string(families[i]) + ".csv";
    out.write(j["permutation_file"].get<std::string>(), [&](std::ostream& o) { write_permutation_csv(o, r.permutation); });
    s.lines.push_back(fmt::format("{}: distortion {:.6g}{}", r.label, r.distortion,
                                  r.null_percentile ? fmt::format(", null percentile {:.4g}", *r.null_percentile) : ""));
    list.push_back(std::move(j));
  }
  s.result = Json{{"config_hash", config_hash},
                  {"families", list},
                  {"null_samples", a.null_samples},
                  {"mask_borders", a.mask_borders}};

  if (!a.seed_pairs.empty()) {
    const std::vector<std::vector<SeedPair>> seeds{parse_seed_pairs(a.seed_pairs)};
    LocalSearchOptions opt;
    opt.tolerance = a.tolerance;
    opt.neighborhood_k = a.neighborhood_k;
    const auto search = local_search(GraphView(graph), seeds, opt);
    Json ls{{"tolerance", a.tolerance}, {"neighborhood_k", a.neighborhood_k}};
    if (!search.candidates.empty()) {
      const auto& r = search.candidates.front();
      ls["complete"] = true;
      ls["distortion"] = r.distortion;
      ls["permutation_file"] = "perm_local_search.csv";
      out.write("perm_local_search.csv", [&](std::ostream& o) { write_permutation_csv(o, r.permutation); });
      s.lines.push_back(fmt::format("local search: complete, distortion {:.6g}", r.distortion));
    } else {
      const auto& f = search.failures.front();
      std::size_t mapped = 0;
      for (auto v : f.partial_map) mapped += v >= 0;
      ls["complete"] = false;
      ls["blocking_node"] = f.blocking_node;
      ls["mapped"] = mapped;
      s.lines.push_back(fmt::format("local search: blocked at node {} after {} of {} nodes", f.blocking_node, mapped,
                                    graph.n()));
    }
    s.result["local_search"] = ls;
  }
  out.json("symmetry.json", s.result);
}

struct ReadoutArgs {
  int positions = 64;
  std::optional<int> at;
  std::optional<double> jaccard;
};

void cmd_readout(const Globals& g, const ReadoutArgs& a, Summary& s) {
  if (a.positions < 4) throw ConfigError("--positions must be >= 4");
  const auto retina = make_line_retina(a.positions);
  const auto [first, second] = retina.h_detectors();
  const std::vector<TemplateDetector> templates{first, second};
  PropagateOptions opt;
  opt.max_steps = a.positions;
  opt.jaccard_threshold = a.jaccard;
  const GraphView view(retina.graph);

  std::vector<int> xs;
  if (a.at) {
    if (*a.at < 0 || *a.at > retina.last_anchor()) {
      throw DomainError(fmt::format("--at {} outside [0, {}]", *a.at, retina.last_anchor()));
    }
    xs.push_back(*a.at);
  } else {
    for (int x = 0; x <= retina.last_anchor(); ++x) xs.push_back(x);
  }

  std::vector<WaveTrace> traces;
  Json decoded = Json::array();
  std::size_t errors = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t fitted = 0;
  for (int x : xs) {
    auto trace = propagate(view, std::span(&retina.shift, 1), retina.letter_h(x), templates, opt);
    trace.channel = x;
    const auto d = decode(trace, first, second);
    const bool ok = d.decodable && d.what == "H" && d.where == static_cast<double>(x);
    errors += !ok;
    if (d.decodable) {
      sx += x;
      sy += d.dt;
      sxx += static_cast<double>(x) * x;
      sxy += static_cast<double>(x) * d.dt;
      ++fitted;
    }
    auto j = to_json(d);
    j["x0"] = x;
    decoded.push_back(std::move(j));
    if (a.at && !d.decodable) throw Error(ErrorKind::undecodable, fmt::format("readout at x0 = {}: {}", x, d.reason));
    traces.push_back(std::move(trace));
  }
  const double denom = static_cast<double>(fitted) * sxx - sx * sx;
  const double slope = denom != 0.0 ? (static_cast<double>(fitted) * sxy - sx * sy) / denom : 0.0;

  ArtifactWriter out(g.out_dir, s.manifest);
  out.write("trace.csv", [&](std::ostream& o) { write_trace_csv(o, traces); });
  s.result = Json{{"positions", a.positions}, {"swept", xs.size()}, {"errors", errors}, {"dt_slope", slope},
                  {"decoded", decoded}};
  out.json("readout.json", s.result);
  s.lines.push_back(fmt::format("read-out: {} positions, {} errors, dt slope {:.6g}", xs.size(), errors, slope));
}

struct AbArgs {
  std::optional<std::uint64_t> draws;
  std::optional<std::size_t> null_samples;
  std::optional<std::size_t> bootstrap;
  std::optional<double> tolerance;
  std::optional<double> anisotropy;
};

void cmd_ab(const Globals& g, const AbArgs& a, Summary& s) {
  AbConfig c = g.config.empty() ? default_ab_config() : parse_ab_config(ConfigFile::load(g.config));
  if (g.seed) c.seed = *g.seed;
  if (a.draws) c.draws_a = c.draws_b = *a.draws;
  if (a.null_samples) c.null_samples = *a.null_samples;
  if (a.bootstrap) c.bootstrap = *a.bootstrap;
  if (a.tolerance) c.search.tolerance = *a.tolerance;
  if (a.anisotropy) c.world.anisotropy = *a.anisotropy;
  const auto report = run_ab_experiment(c);
  ArtifactWriter out(g.out_dir, s.manifest);
  out.text("ab_config.txt", c.canonical());
  s.result = report.to_json();
  s.result["config_hash"] = sha256_hex(c.canonical());
  out.json("ab.json", s.result);
  for (const auto* grp : {&report.a, &report.b}) {
    s.lines.push_back(fmt::format("group {}: rotation90 distortion {:.4g} (null q01 {:.4g}), recognition {:.3g}", grp->name,
                                  grp->distortion, grp->null_q01, grp->recognition));
  }
  s.lines.push_back(fmt::format("ratio B/A {:.4g}{}", report.ratio, report.insufficient_sample ? " (insufficient sample)" : ""));
}

struct AppendixArgs {
  std::size_t trials = 100;
  std::size_t m = 2;
  std::size_t min_n = 4;
  std::size_t max_n = 8;
};

void cmd_appendix(const Globals& g, const AppendixArgs& a, Summary& s) {
  if (a.min_n < 2 || a.max_n < a.min_n || a.max_n > 16) throw ConfigError("need 2 <= --min-n <= --max-n <= 16");
  if (a.m < 1 || a.m > a.min_n) throw ConfigError("--m must lie in [1, --min-n]");
  const auto report = verify_appendix(a.trials, g.seed.value_or(1), a.m, a.min_n, a.max_n);
  const auto converse = converse_example();
  ArtifactWriter out(g.out_dir, s.manifest);
  s.result = Json{{"appendix", report.to_json()}, {"converse", converse.to_json()}};
  out.json("appendix.json", s.result);
  s.lines.push_back(fmt::format("{} trials, {} failures; converse example flagged non-invariant: {}", report.trials.size(),
                                report.failures(), !converse.pairs.holds));
  if (report.failures() > 0) {
    throw DomainError(fmt::format("marginal identities failed in {} of {} trials", report.failures(), report.trials.size()));
  }
}

struct ExportArgs {
  std::string input;
  std::string kind;
  std::string format;
  std::string output;
  bool exact = false;
};

Json graph_json(const ConcurrenceGraph& graph, const std::string& config_hash) {
  Json edges = Json::array();
  for (const auto& e : graph.weights()) edges.push_back(Json{{"u", e.u}, {"v", e.v}, {"count", e.count}, {"weight", e.weight}});
  return Json{{"n", graph.n()},
              {"N", graph.total()},
              {"transform", to_string(graph.transform())},
              {"config_hash", config_hash},
              {"node_counts", std::vector<std::uint64_t>(graph.node_counts().begin(), graph.node_counts().end())},
              {"edges", edges}};
}

void cmd_export(const Globals& g, const ExportArgs& a, Summary& s) {
  check_choice("--format", a.format, {"graphml", "csv", "json", "binary"});
  check_choice("--kind", a.kind, {"graph", "observations", "permutation", "joint"});
  const fs::path output = a.output.empty() ? fs::path(g.out_dir) / ("export." + a.format) : fs::path(a.output);
  const fs::path rel = output.is_absolute() ? output : fs::relative(output, g.out_dir);
  ArtifactWriter out(g.out_dir, s.manifest);
  auto bad_format = [&] { return ConfigError(fmt::format("export: format '{}' not supported for {}", a.format, a.kind)); };

  if (a.kind == "graph") {
    std::string hash;
    const auto graph = with_input(a.input, [&](std::istream& in) { return read_graph_csv(in, &hash); });
    if (a.format == "graphml") {
      out.write(rel.string(), [&](std::ostream& o) { write_graphml(o, graph, hash); });
    } else if (a.format == "csv") {
      out.write(rel.string(), [&](std::ostream& o) { write_graph_csv(o, graph, hash); });
    } else if (a.format == "json") {
      out.json(rel.string(), graph_json(graph, hash));
    } else {
      throw bad_format();
    }
  } else if (a.kind == "observations") {
    const auto run = load_observations(a.input);
    if (a.format == "csv") {
      out.write(rel.string(), [&](std::ostream& o) { write_observations_csv(o, run); });
    } else if (a.format == "binary") {
      out.write(rel.string(), [&](std::ostream& o) { write_observations_binary(o, run); }, true);
    } else if (a.format == "json") {
      Json records = Json::array();
      for (const auto& r : run.records) records.push_back(Json{{"timestamp", r.timestamp}, {"active", r.active}});
      out.json(rel.string(), Json{{"n", run.n}, {"config_hash", run.config_hash}, {"records", records}});
    } else {
      throw bad_format();
    }
  } else if (a.kind == "permutation") {
    const auto perm = with_input(a.input, [](std::istream& in) { return read_permutation_csv(in); });
    if (a.format == "csv") {
      out.write(rel.string(), [&](std::ostream& o) { write_permutation_csv(o, perm); });
    } else if (a.format == "json") {
      out.json(rel.string(), Json{{"map", std::vector<NodeId>(perm.map().begin(), perm.map().end())}});
    } else {
      throw bad_format();
    }
  } else if (a.kind == "joint") {
    if (a.exact) {
      const auto psi = with_input(a.input, [](std::istream& in) { return read_joint_csv_exact(in); });
      if (a.format != "csv") throw bad_format();
      out.write(rel.string(), [&](std::ostream& o) { write_joint_csv(o, psi); });
    } else {
      const auto psi = with_input(a.input, [](std::istream& in) { return read_joint_csv(in); });
      if (a.format != "csv") throw bad_format();
      out.write(rel.string(), [&](std::ostream& o) { write_joint_csv(o, psi); });
    }
  } else {
    throw ConfigError(fmt::format("export: unknown artifact kind '{}'", a.kind));
  }
  s.result = Json{{"kind", a.kind}, {"format", a.format}, {"output", rel.string()}};
  s.lines.push_back(fmt::format("exported {} as {} to {}", a.kind, a.format, output.string()));
}

void cmd_pipeline(const Globals& g, Summary& s) {
  if (g.config.empty()) throw ConfigError("pipeline: --config is required");
  auto c = load_pipeline_config(g.config);
  if (g.seed) c.seed = *g.seed;
  s.manifest = run_pipeline(c, g.out_dir);
  s.result = Json{{"status", s.manifest.status}, {"digest", s.manifest.digest()}};
  s.lines.push_back(fmt::format("pipeline ok, digest {}", s.manifest.digest()));
}

Json outputs_json(const ExperimentManifest& m) {
  Json o = Json::array();
  for (const auto& f : m.outputs) o.push_back(Json{{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrence graphs, their symmetries and symmetry-based read-out"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--json", g.json, "Print a JSON summary on standard output");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Draw observations from a world");
  generate->add_option("--world", gen.world, "World config file ([world] section)")->check(CLI::ExistingFile);
  generate->add_option("--draws", gen.draws, "Number of draws");
  generate->add_option("--format", gen.format, "csv, binary or both")->capture_default_str();

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn", "Train a detector bank on edge-world rasters and activate it");
  learn_cmd->add_option("--world", learn.world, "World config file ([world] section)")->check(CLI::ExistingFile);
  learn_cmd->add_option("--steps", learn.steps, "Training steps (sequential mode)");
  learn_cmd->add_option("--rate", learn.rate, "Learning rate");
  learn_cmd->add_option("--threshold", learn.threshold, "Activation threshold in (0, 1]");
  learn_cmd->add_option("--bank-size", learn.bank_size, "Detectors (0: one per edge detector)");
  learn_cmd->add_option("--draws", learn.draws, "Observation draws");
  learn_cmd->add_option("--mode", learn.mode, "sequential or interleaved");

  GraphArgs graph;
  auto* graph_cmd = app.add_subcommand("graph", "Accumulate a concurrence graph from observations");
  graph_cmd->add_option("--observations", graph.observations, "Observation run (.csv or .bin)")
      ->required()
      ->check(CLI::ExistingFile);
  graph_cmd->add_option("--geometry", graph.geometry, "Detector geometry CSV for the GraphML")->check(CLI::ExistingFile);
  graph_cmd->add_option("--transform", graph.transform, "identity, log1p or rank")->capture_default_str();
  graph_cmd->add_option("--homogeneity-tolerance", graph.tolerance, "Allowed marginal deviation")->capture_default_str();

  SymmetryArgs sym;
  auto* sym_cmd = app.add_subcommand("symmetry", "Score transformation families on a graph");
  sym_cmd->add_option("--graph", sym.graph, "Graph CSV")->required()->check(CLI::ExistingFile);
  sym_cmd->add_option("--geometry", sym.geometry, "Detector geometry CSV")->required()->check(CLI::ExistingFile);
  sym_cmd->add_option("--family", sym.families, "translation, rotation90, reflection, rescale, log_shift")
      ->required()
      ->delimiter(',');
  sym_cmd->add_option("--null-samples", sym.null_samples, "Random permutations in the null")->capture_default_str();
  sym_cmd->add_flag("--mask-borders,!--no-mask-borders", sym.mask_borders, "Exclude border nodes from scoring")
      ->capture_default_str();
  sym_cmd->add_option("--dx", sym.dx, "Translation x step")->capture_default_str();
  sym_cmd->add_option("--dy", sym.dy, "Translation y step")->capture_default_str();
  sym_cmd->add_option("--steps", sym.steps, "Log-shift steps")->capture_default_str();
  sym_cmd->add_flag("--toroidal", sym.toroidal, "Translations wrap around the grid");
  sym_cmd->add_option("--seed-pair", sym.seed_pairs, "Local search seed pair u:v (repeatable)")->delimiter(',');
  sym_cmd->add_option("--tolerance", sym.tolerance, "Local search profile tolerance")->capture_default_str();
  sym_cmd->add_option("--neighborhood-k", sym.neighborhood_k, "Local search hop radius")->capture_default_str();

  ReadoutArgs ro;
  auto* ro_cmd = app.add_subcommand("readout", "Wave read-out of the letter H on a line retina");
  ro_cmd->add_option("--positions", ro.positions, "Retina positions")->capture_default_str();
  ro_cmd->add_option("--at", ro.at, "Single start position (default: sweep all)");
  ro_cmd->add_option("--jaccard", ro.jaccard, "Template match threshold (default: exact)");

  AbArgs ab;
  auto* ab_cmd = app.add_subcommand("ab-experiment", "Anisotropic vs rotation-scrambled rearing");
  ab_cmd->add_option("--draws", ab.draws, "Draws per group");
  ab_cmd->add_option("--null-samples", ab.null_samples, "Random permutations in each null");
  ab_cmd->add_option("--bootstrap", ab.bootstrap, "Bootstrap replicates");
  ab_cmd->add_option("--tolerance", ab.tolerance, "Local search profile tolerance");
  ab_cmd->add_option("--anisotropy", ab.anisotropy, "Probability that a line is horizontal");

  AppendixArgs ap;
  auto* ap_cmd = app.add_subcommand("verify-appendix", "Exact check of marginal symmetry inheritance");
  ap_cmd->add_option("--trials", ap.trials, "Random tables")->capture_default_str();
  ap_cmd->add_option("--m", ap.m, "Marginal order")->capture_default_str();
  ap_cmd->add_option("--min-n", ap.min_n, "Smallest table")->capture_default_str();
  ap_cmd->add_option("--max-n", ap.max_n, "Largest table")->capture_default_str();

  ExportArgs ex;
  auto* ex_cmd = app.add_subcommand("export", "Convert an artifact to another documented format");
  ex_cmd->add_option("--input", ex.input, "Artifact file")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--kind", ex.kind, "graph, observations, permutation or joint")->required();
  ex_cmd->add_option("--format", ex.format, "graphml, csv, json or binary")->required();
  ex_cmd->add_option("--output", ex.output, "Output file (default: <out-dir>/export.<format>)");
  ex_cmd->add_flag("--exact", ex.exact, "Joint tables hold exact rationals");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full pipeline from --config and write a manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  Summary s;
  try {
    if (*generate) {
      s.command = "generate";
      cmd_generate(g, gen, s);
    } else if (*learn_cmd) {
      s.command = "learn";
      cmd_learn(g, learn, s);
    } else if (*graph_cmd) {
      s.command = "graph";
      cmd_graph(g, graph, s);
    } else if (*sym_cmd) {
      s.command = "symmetry";
      cmd_symmetry(g, sym, s);
    } else if (*ro_cmd) {
      s.command = "readout";
      cmd_readout(g, ro, s);
    } else if (*ab_cmd) {
      s.command = "ab-experiment";
      cmd_ab(g, ab, s);
    } else if (*ap_cmd) {
      s.command = "verify-appendix";
      cmd_appendix(g, ap, s);
    } else if (*ex_cmd) {
      s.command = "export";
      cmd_export(g, ex, s);
    } else if (*pipe_cmd) {
      s.command = "pipeline";
      cmd_pipeline(g, s);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (g.json) {
      std::cout << Json{{"command", s.command}, {"status", "error"}, {"kind", error_kind_name(e.kind())},
                        {"message", e.what()}}.dump(2)
                << "\n";
    }
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (g.json) {
      std::cout << Json{{"command", s.command}, {"status", "error"}, {"kind", "internal"}, {"message", e.what()}}.dump(2)
                << "\n";
    }
    return 1;
  }

  if (g.json) {
    std::cout << Json{{"command", s.command}, {"status", "ok"}, {"outputs", outputs_json(s.manifest)}, {"result", s.result}}
                     .dump(2)
              << "\n";
  } else {
    for (const auto& line : s.lines) std::cout << line << "\n";
  }
  return 0;
}
