#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <algorithm>
#include <sstream>

#include "concgraph/config.hpp"
#include "concgraph/error.hpp"
#include "concgraph/harness.hpp"
#include "concgraph/io.hpp"

using namespace concgraph;

namespace {

const std::string kHash(64, 'a');

ObservationRun sample_run() {
  WorldConfig c;
  c.width = c.height = 8;
  c.seed = 5;
  const EdgeWorld w(c);
  ObservationRun run{w.n(), kHash, {}};
  for (std::uint64_t i = 0; i < 100; ++i) run.records.push_back(w.draw(i));
  run.records.push_back(Observation{100, {}});  // empty sets must survive too
  return run;
}

}  // namespace

TEST(Io, ObservationsCsvRoundTrip) {
  const auto run = sample_run();
  std::stringstream s;
  write_observations_csv(s, run);
  const auto back = read_observations_csv(s);
  EXPECT_EQ(back.n, run.n);
  EXPECT_EQ(back.config_hash, run.config_hash);
  EXPECT_EQ(back.records, run.records);
}

TEST(Io, ObservationsBinaryRoundTrip) {
  const auto run = sample_run();
  std::stringstream s(std::ios::in | std::ios::out | std::ios::binary);
  write_observations_binary(s, run);
  const auto back = read_observations_binary(s);
  EXPECT_EQ(back.n, run.n);
  EXPECT_EQ(back.config_hash, run.config_hash);
  EXPECT_EQ(back.records, run.records);
}

TEST(Io, ObservationsBinaryRejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXXjunk");
  EXPECT_THROW(read_observations_binary(bad), IoError);
  std::stringstream s(std::ios::in | std::ios::out | std::ios::binary);
  write_observations_binary(s, sample_run());
  const std::string full = s.str();
  std::stringstream cut(full.substr(0, full.size() - 3));
  EXPECT_THROW(read_observations_binary(cut), IoError);
}

TEST(Io, MalformedObservationLineNamesTheLine) {
  std::stringstream s("# n = 4\ntimestamp,active_indices\n0,1 2\n1,3 x\n");
  try {
    read_observations_csv(s);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Io, GraphCsvRoundTripIsExact) {
  const auto run = sample_run();
  ConcurrenceGraph g(run.n, WeightTransform::rank);
  g.record(run.records);
  std::stringstream s;
  write_graph_csv(s, g, kHash);
  std::string hash;
  const auto back = read_graph_csv(s, &hash);
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.transform(), WeightTransform::rank);
  EXPECT_EQ(hash, kHash);
}

TEST(Io, GraphCsvRejectsGarbage) {
  std::stringstream s("[world]\nkind = edge_image\n");
  EXPECT_THROW(read_graph_csv(s), IoError);
}

TEST(Io, GraphMlIsWellFormed) {
  const auto run = sample_run();
  ConcurrenceGraph g(run.n);
  g.record(run.records);
  WorldConfig c;
  c.width = c.height = 8;
  const EdgeWorld w(c);
  std::stringstream s;
  write_graphml(s, g, kHash, w.geometry());
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(s, tree));
  const auto& graph = tree.get_child("graphml.graph");
  std::size_t nodes = 0, edges = 0;
  for (const auto& [tag, child] : graph) {
    nodes += tag == "node";
    edges += tag == "edge";
  }
  EXPECT_EQ(nodes, g.n());
  EXPECT_EQ(edges, g.weights().size());
}

TEST(Io, PermutationRoundTrip) {
  Rng rng(3);
  const auto p = Permutation::random(50, rng);
  std::stringstream s;
  write_permutation_csv(s, p);
  EXPECT_EQ(read_permutation_csv(s), p);
  std::stringstream dup("0,1\n1,1\n");
  EXPECT_THROW(read_permutation_csv(dup), Error);
}

TEST(Io, GeometryRoundTrip) {
  WorldConfig c;
  c.width = c.height = 8;
  c.scales = 2;
  const EdgeWorld w(c);
  std::stringstream s;
  write_geometry_csv(s, w.geometry());
  const auto back = read_geometry_csv(s);
  EXPECT_EQ(back, std::vector<DetectorGeometry>(w.geometry().begin(), w.geometry().end()));
}

TEST(Io, BankRoundTrip) {
  const DetectorBank bank({Detector{{0.6, 0.8, 0.0}, {}}, Detector{{0.0, 0.1234567890123, 0.99}, {}}}, 0.05,
                          BankMode::learned);
  std::stringstream s;
  write_bank_csv(s, bank);
  const auto back = read_bank_csv(s);
  ASSERT_EQ(back.size(), bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) EXPECT_EQ(back.detector(k).weights, bank.detector(k).weights);
}

TEST(Io, JointTableRoundTrips) {
  Rng rng(9);
  const auto exact = random_rational_distribution(4, rng);
  std::stringstream s;
  write_joint_csv(s, exact);
  const auto back = read_joint_csv_exact(s);
  EXPECT_TRUE(std::ranges::equal(back.table(), exact.table()));
  const auto psi = JointDistribution<double>::uniform(3);
  std::stringstream d;
  write_joint_csv(d, psi);
  const auto dback = read_joint_csv(d);
  EXPECT_TRUE(std::ranges::equal(dback.table(), psi.table()));
}

TEST(Io, TraceCsvHasOneRowPerFront) {
  const auto r = make_line_retina(12);
  const GraphView v(r.graph);
  PropagateOptions opt;
  opt.max_steps = 3;
  const std::vector<WaveTrace> traces{propagate(v, std::span(&r.shift, 1), r.letter_h(4), {}, opt)};
  std::stringstream s;
  write_trace_csv(s, traces);
  std::size_t rows = 0;
  for (std::string line; std::getline(s, line);) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  EXPECT_EQ(rows, traces[0].fronts.size() + 1);  // plus the column header
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Io, MissingFileIsIoError) {
  EXPECT_THROW(read_text("/nonexistent/dir/file.txt"), IoError);
}

TEST(Config, UnknownKeyIsRejected) {
  const auto file = ConfigFile::parse("[world]\nkind = edge_image\nwidht = 8\n[pipeline]\nseed = 1\n");
  try {
    parse_pipeline_config(file);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("widht"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownSectionIsRejected) {
  const auto file = ConfigFile::parse("[world]\nkind = edge_image\n[pipline]\nseed = 1\n");
  EXPECT_THROW(parse_pipeline_config(file), ConfigError);
}

TEST(Config, BadValueIsRejected) {
  EXPECT_THROW(parse_pipeline_config(ConfigFile::parse("[world]\nwidth = eight\n")), ConfigError);
  EXPECT_THROW(parse_pipeline_config(ConfigFile::parse("[world]\nkind = video\n")), ConfigError);
  EXPECT_THROW(parse_pipeline_config(ConfigFile::parse("[pipeline]\ntransform = sqrt\n")), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"minimal_table.ini", "edge_8x8.ini", "edge_torus_translation.ini", "harmonic.ini",
                           "learned_edges.ini"}) {
    EXPECT_NO_THROW(load_pipeline_config(std::filesystem::path(CONCGRAPH_CONFIG_DIR) / name)) << name;
  }
}

TEST(Config, HashTracksEveryKey) {
  const auto c = load_pipeline_config(std::filesystem::path(CONCGRAPH_CONFIG_DIR) / "edge_8x8.ini");
  EXPECT_EQ(c.hash(), load_pipeline_config(std::filesystem::path(CONCGRAPH_CONFIG_DIR) / "edge_8x8.ini").hash());
  auto d = c;
  d.null_samples += 1;
  EXPECT_NE(d.hash(), c.hash());
  d = c;
  d.world.line_probability = 0.5;
  EXPECT_NE(d.hash(), c.hash());
  d = c;
  d.shards = 7;  // scheduling only
  EXPECT_EQ(d.hash(), c.hash());
}
