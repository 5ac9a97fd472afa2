#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "concgraph/concurrence.hpp"
#include "concgraph/features.hpp"
#include "concgraph/marginals.hpp"
#include "concgraph/readout.hpp"
#include "concgraph/stimulus.hpp"
#include "concgraph/symmetry.hpp"

namespace concgraph {

using Json = nlohmann::ordered_json;

// Observation runs. CSV: comment header, then `timestamp,active_indices` with the indices
// space separated. Binary: "CGOB", u32 version, u32 n, u64 count, 32-byte config hash,
// then per record u64 timestamp, u32 k, k x u32 index. Little endian throughout.
struct ObservationRun {
  std::size_t n = 0;
  std::string config_hash;  // 64 hex digits, or empty
  std::vector<Observation> records;
};

void write_observations_csv(std::ostream& out, const ObservationRun& run);
ObservationRun read_observations_csv(std::istream& in);
void write_observations_binary(std::ostream& out, const ObservationRun& run);
ObservationRun read_observations_binary(std::istream& in);

// Concurrence graph as an edge list `u,v,count,weight`. The comment header carries N, n,
// transform, config hash and the node counts, so the graph round-trips exactly.
void write_graph_csv(std::ostream& out, const ConcurrenceGraph& graph, const std::string& config_hash);
ConcurrenceGraph read_graph_csv(std::istream& in, std::string* config_hash = nullptr);
void write_graphml(std::ostream& out, const ConcurrenceGraph& graph, const std::string& config_hash,
                   std::span<const DetectorGeometry> geometry = {});

void write_permutation_csv(std::ostream& out, const Permutation& perm);
Permutation read_permutation_csv(std::istream& in);

void write_geometry_csv(std::ostream& out, std::span<const DetectorGeometry> geometry);
std::vector<DetectorGeometry> read_geometry_csv(std::istream& in);

/// One row of weights per detector. Geometry, when present, goes to a separate sidecar.
void write_bank_csv(std::ostream& out, const DetectorBank& bank);
DetectorBank read_bank_csv(std::istream& in, std::istream* geometry_sidecar = nullptr);

void write_joint_csv(std::ostream& out, const JointDistribution<double>& psi);
void write_joint_csv(std::ostream& out, const JointDistribution<Rational>& psi);
JointDistribution<double> read_joint_csv(std::istream& in);
JointDistribution<Rational> read_joint_csv_exact(std::istream& in);

/// `channel,step,direction,node_set_hash,matched_template`; direction is the exponent word.
void write_trace_csv(std::ostream& out, std::span<const WaveTrace> traces);

Json to_json(const SymmetryReport& report);
Json to_json(const DecodeResult& result);
Json to_json(const GroupReport& report);
Json to_json(const HomogeneityReport& report);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

// File helpers; all failures raise IoError naming the path.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

template <class Fn>
void with_output(const std::filesystem::path& path, Fn&& fn, bool binary = false);
template <class Fn>
auto with_input(const std::filesystem::path& path, Fn&& fn, bool binary = false);

}  // namespace concgraph

#include "concgraph/io_inl.hpp"
