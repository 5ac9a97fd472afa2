#include "concgraph/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "concgraph/digest.hpp"
#include "concgraph/error.hpp"

namespace concgraph {

namespace {

constexpr char observation_magic[4] = {'C', 'G', 'O', 'B'};
constexpr std::uint32_t observation_version = 1;

// Line reader that collects `# key=value` comments and skips blank lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next data line (comments are absorbed into meta()). False at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
          auto key = trim(line.substr(1, eq - 1));
          meta_[key] = trim(line.substr(eq + 1));
        }
        continue;
      }
      return true;
    }
    return false;
  }

  /// Consumes the header row and checks it.
  void expect_header(std::string_view header) {
    std::string line;
    if (!next(line)) fail(fmt::format("missing header '{}'", header));
    if (line != header) fail(fmt::format("expected header '{}', got '{}'", header, line));
  }

  const std::string& meta(const std::string& key) const {
    const auto it = meta_.find(key);
    if (it == meta_.end()) fail(fmt::format("missing '# {}=' header line", key));
    return it->second;
  }
  std::string meta_or(const std::string& key, std::string fallback) const {
    const auto it = meta_.find(key);
    return it == meta_.end() ? fallback : it->second;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw IoError(fmt::format("line {}: {}", line_no_, message));
  }

  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
  std::map<std::string, std::string> meta_;
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& text, const CsvReader& reader) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) reader.fail(fmt::format("'{}' is not a valid number", text));
  return value;
}

std::vector<NodeId> parse_index_list(const std::string& text, const CsvReader& reader) {
  std::vector<NodeId> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(parse_number<NodeId>(tok, reader));
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

template <class U>
U get_le(std::istream& in) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(U))) throw IoError("truncated binary observation run");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void check_run(const ObservationRun& run) {
  for (const auto& obs : run.records) {
    for (NodeId k : obs.active) {
      if (k >= run.n) throw DomainError(fmt::format("observation {}: index {} out of range (n={})", obs.timestamp, k, run.n));
    }
  }
}

}  // namespace

std::string format_double(double x) { return fmt::format("{}", x); }

// ---------------------------------------------------------------------------
// Observations

void write_observations_csv(std::ostream& out, const ObservationRun& run) {
  check_run(run);
  out << "# concgraph observations v1\n";
  out << "# n=" << run.n << "\n";
  out << "# config_hash=" << run.config_hash << "\n";
  out << "timestamp,active_indices\n";
  std::string line;
  for (const auto& obs : run.records) {
    line = fmt::format("{},{}\n", obs.timestamp, fmt::join(obs.active, " "));
    out << line;
  }
}

ObservationRun read_observations_csv(std::istream& in) {
  CsvReader reader(in);
  reader.expect_header("timestamp,active_indices");
  ObservationRun run;
  run.n = parse_number<std::size_t>(reader.meta("n"), reader);
  run.config_hash = reader.meta_or("config_hash", "");
  std::string line;
  while (reader.next(line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) reader.fail("expected 'timestamp,active_indices'");
    Observation obs;
    obs.timestamp = parse_number<std::uint64_t>(line.substr(0, comma), reader);
    obs.active = parse_index_list(line.substr(comma + 1), reader);
    normalize(obs.active);
    for (NodeId k : obs.active) {
      if (k >= run.n) reader.fail(fmt::format("index {} out of range (n={})", k, run.n));
    }
    if (!run.records.empty() && obs.timestamp <= run.records.back().timestamp) {
      reader.fail("timestamps must be strictly increasing");
    }
    run.records.push_back(std::move(obs));
  }
  return run;
}

void write_observations_binary(std::ostream& out, const ObservationRun& run) {
  check_run(run);
  const Sha256 hash = run.config_hash.empty() ? Sha256{} : from_hex(run.config_hash);
  out.write(observation_magic, 4);
  put_u32(out, observation_version);
  put_u32(out, static_cast<std::uint32_t>(run.n));
  put_u64(out, run.records.size());
  out.write(reinterpret_cast<const char*>(hash.data()), static_cast<std::streamsize>(hash.size()));
  for (const auto& obs : run.records) {
    put_u64(out, obs.timestamp);
    put_u32(out, static_cast<std::uint32_t>(obs.active.size()));
    for (NodeId k : obs.active) put_u32(out, k);
  }
}

ObservationRun read_observations_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(observation_magic, 4)) {
    throw IoError("not a binary observation run (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != observation_version) throw IoError(fmt::format("unsupported observation run version {}", version));
  ObservationRun run;
  run.n = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  Sha256 hash{};
  if (!in.read(reinterpret_cast<char*>(hash.data()), static_cast<std::streamsize>(hash.size()))) {
    throw IoError("truncated binary observation run");
  }
  run.config_hash = hash == Sha256{} ? std::string() : to_hex(hash);
  run.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1U << 20)));
  for (std::uint64_t r = 0; r < count; ++r) {
    Observation obs;
    obs.timestamp = get_le<std::uint64_t>(in);
    const auto k = get_le<std::uint32_t>(in);
    if (k > run.n) throw IoError(fmt::format("record {}: {} active indices exceed n={}", r, k, run.n));
    obs.active.resize(k);
    for (auto& v : obs.active) {
      v = get_le<std::uint32_t>(in);
      if (v >= run.n) throw IoError(fmt::format("record {}: index {} out of range", r, v));
    }
    run.records.push_back(std::move(obs));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Graphs

void write_graph_csv(std::ostream& out, const ConcurrenceGraph& graph, const std::string& config_hash) {
  out << "# concgraph graph v1\n";
  out << "# N=" << graph.total() << "\n";
  out << "# n=" << graph.n() << "\n";
  out << "# transform=" << to_string(graph.transform()) << "\n";
  out << "# config_hash=" << config_hash << "\n";
  out << fmt::format("# node_counts={}\n", fmt::join(graph.node_counts(), " "));
  out << "u,v,count,weight\n";
  if (graph.total() == 0) return;
  for (const auto& e : graph.weights()) out << fmt::format("{},{},{},{}\n", e.u, e.v, e.count, e.weight);
}

ConcurrenceGraph read_graph_csv(std::istream& in, std::string* config_hash) {
  CsvReader reader(in);
  reader.expect_header("u,v,count,weight");
  const auto n = parse_number<std::size_t>(reader.meta("n"), reader);
  const auto total = parse_number<std::uint64_t>(reader.meta("N"), reader);
  WeightTransform transform;
  try {
    transform = parse_weight_transform(reader.meta("transform"));
  } catch (const ConfigError& e) {
    reader.fail(e.what());
  }
  std::vector<std::uint64_t> node_counts;
  {
    std::istringstream ss(reader.meta("node_counts"));
    std::string tok;
    while (ss >> tok) node_counts.push_back(parse_number<std::uint64_t>(tok, reader));
  }
  if (node_counts.size() != n) reader.fail(fmt::format("node_counts lists {} values, expected {}", node_counts.size(), n));
  ConcurrenceGraph shape(n, transform);
  std::vector<std::uint64_t> pairs(n < 2 ? 0 : n * (n - 1) / 2, 0);
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, ',');
    if (f.size() != 4) reader.fail("expected 'u,v,count,weight'");
    auto u = parse_number<NodeId>(f[0], reader);
    auto v = parse_number<NodeId>(f[1], reader);
    const auto c = parse_number<std::uint64_t>(f[2], reader);
    if (u >= n || v >= n || u == v) reader.fail(fmt::format("invalid edge ({}, {})", u, v));
    if (u > v) std::swap(u, v);
    pairs[shape.packed_index(u, v)] = c;
  }
  if (config_hash) *config_hash = reader.meta_or("config_hash", "");
  try {
    return ConcurrenceGraph::from_counts(n, total, std::move(node_counts), std::move(pairs), transform);
  } catch (const DomainError& e) {
    throw IoError(e.what());
  }
}

void write_graphml(std::ostream& out, const ConcurrenceGraph& graph, const std::string& config_hash,
                   std::span<const DetectorGeometry> geometry) {
  if (!geometry.empty() && geometry.size() != graph.n()) throw DomainError("graphml: geometry size differs from n");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" "
         "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
         "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";
  out << "  <key id=\"N\" for=\"graph\" attr.name=\"N\" attr.type=\"long\"/>\n";
  out << "  <key id=\"n\" for=\"graph\" attr.name=\"n\" attr.type=\"long\"/>\n";
  out << "  <key id=\"transform\" for=\"graph\" attr.name=\"transform\" attr.type=\"string\"/>\n";
  out << "  <key id=\"config_hash\" for=\"graph\" attr.name=\"config_hash\" attr.type=\"string\"/>\n";
  out << "  <key id=\"node_count\" for=\"node\" attr.name=\"count\" attr.type=\"long\"/>\n";
  if (!geometry.empty()) {
    out << "  <key id=\"x\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n";
    out << "  <key id=\"y\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n";
    out << "  <key id=\"omega\" for=\"node\" attr.name=\"omega\" attr.type=\"double\"/>\n";
    out << "  <key id=\"lambda\" for=\"node\" attr.name=\"lambda\" attr.type=\"double\"/>\n";
  }
  out << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n";
  out << "  <key id=\"count\" for=\"edge\" attr.name=\"count\" attr.type=\"long\"/>\n";
  out << "  <graph id=\"concurrence\" edgedefault=\"undirected\">\n";
  out << "    <data key=\"N\">" << graph.total() << "</data>\n";
  out << "    <data key=\"n\">" << graph.n() << "</data>\n";
  out << "    <data key=\"transform\">" << to_string(graph.transform()) << "</data>\n";
  out << "    <data key=\"config_hash\">" << config_hash << "</data>\n";
  for (NodeId k = 0; k < graph.n(); ++k) {
    out << fmt::format("    <node id=\"n{}\"><data key=\"node_count\">{}</data>", k, graph.node_counts()[k]);
    if (!geometry.empty()) {
      const auto& g = geometry[k];
      out << fmt::format("<data key=\"x\">{}</data><data key=\"y\">{}</data><data key=\"omega\">{}</data>"
                         "<data key=\"lambda\">{}</data>",
                         g.x, g.y, g.omega, g.lambda());
    }
    out << "</node>\n";
  }
  if (graph.total() > 0) {
    std::size_t id = 0;
    for (const auto& e : graph.weights()) {
      out << fmt::format(
          "    <edge id=\"e{}\" source=\"n{}\" target=\"n{}\"><data key=\"weight\">{}</data>"
          "<data key=\"count\">{}</data></edge>\n",
          id++, e.u, e.v, e.weight, e.count);
    }
  }
  out << "  </graph>\n</graphml>\n";
}

// ---------------------------------------------------------------------------
// Permutations, geometry, banks

void write_permutation_csv(std::ostream& out, const Permutation& perm) {
  out << "i,map_i\n";
  for (std::size_t i = 0; i < perm.size(); ++i) out << i << ',' << perm[static_cast<NodeId>(i)] << '\n';
}

Permutation read_permutation_csv(std::istream& in) {
  CsvReader reader(in);
  reader.expect_header("i,map_i");
  std::vector<NodeId> map;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, ',');
    if (f.size() != 2) reader.fail("expected 'i,map_i'");
    const auto i = parse_number<std::size_t>(f[0], reader);
    if (i != map.size()) reader.fail(fmt::format("rows must list i = 0, 1, ... in order (got {})", i));
    map.push_back(parse_number<NodeId>(f[1], reader));
  }
  try {
    return Permutation(std::move(map));
  } catch (const DomainError& e) {
    throw IoError(e.what());
  }
}

void write_geometry_csv(std::ostream& out, std::span<const DetectorGeometry> geometry) {
  out << "id,x,y,omega,lambda\n";
  for (const auto& g : geometry) out << fmt::format("{},{},{},{},{}\n", g.id, g.x, g.y, g.omega, g.lambda());
}

std::vector<DetectorGeometry> read_geometry_csv(std::istream& in) {
  CsvReader reader(in);
  reader.expect_header("id,x,y,omega,lambda");
  std::vector<DetectorGeometry> out;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, ',');
    if (f.size() != 5) reader.fail("expected 'id,x,y,omega,lambda'");
    DetectorGeometry g;
    g.id = parse_number<NodeId>(f[0], reader);
    g.x = parse_number<double>(f[1], reader);
    g.y = parse_number<double>(f[2], reader);
    g.omega = parse_number<double>(f[3], reader);
    const double lambda = parse_number<double>(f[4], reader);
    const double level = std::log2(lambda);
    if (!(lambda >= 1.0) || level != std::round(level)) reader.fail("lambda must be a power of two >= 1");
    g.scale_level = static_cast<int>(level);
    out.push_back(g);
  }
  try {
    validate_geometry(out);
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  return out;
}

void write_bank_csv(std::ostream& out, const DetectorBank& bank) {
  out << "# concgraph bank v1\n";
  out << "# mode=" << (bank.mode() == BankMode::learned ? "learned" : "predefined") << "\n";
  out << "# rate=" << format_double(bank.learning_rate()) << "\n";
  out << "# detectors=" << bank.size() << "\n";
  out << "# dimension=" << bank.dimension() << "\n";
  out << "detector,weights\n";
  for (std::size_t i = 0; i < bank.size(); ++i) {
    out << i << ',' << fmt::format("{}", fmt::join(bank.detector(i).weights, " ")) << '\n';
  }
}

DetectorBank read_bank_csv(std::istream& in, std::istream* geometry_sidecar) {
  CsvReader reader(in);
  reader.expect_header("detector,weights");
  const auto mode_text = reader.meta("mode");
  if (mode_text != "learned" && mode_text != "predefined") reader.fail("mode must be learned or predefined");
  const double rate = parse_number<double>(reader.meta("rate"), reader);
  const auto dimension = parse_number<std::size_t>(reader.meta("dimension"), reader);
  std::vector<Detector> detectors;
  std::string line;
  while (reader.next(line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) reader.fail("expected 'detector,weights'");
    if (parse_number<std::size_t>(line.substr(0, comma), reader) != detectors.size()) reader.fail("detector rows out of order");
    Detector d;
    std::istringstream ss(line.substr(comma + 1));
    std::string tok;
    while (ss >> tok) d.weights.push_back(parse_number<double>(tok, reader));
    if (d.weights.size() != dimension) reader.fail(fmt::format("row has {} weights, expected {}", d.weights.size(), dimension));
    detectors.push_back(std::move(d));
  }
  if (geometry_sidecar) {
    const auto geometry = read_geometry_csv(*geometry_sidecar);
    if (geometry.size() != detectors.size()) throw IoError("geometry sidecar does not match the bank size");
    for (std::size_t i = 0; i < geometry.size(); ++i) detectors[i].geometry = geometry[i];
  }
  try {
    return DetectorBank(std::move(detectors), rate, mode_text == "learned" ? BankMode::learned : BankMode::predefined);
  } catch (const DomainError& e) {
    throw IoError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Joint tables

void write_joint_csv(std::ostream& out, const JointDistribution<double>& psi) {
  out << "# concgraph joint v1\n# n=" << psi.n() << "\nstate_bitmask,probability\n";
  for (State x = 0; x < psi.states(); ++x) out << x << ',' << format_double(psi[x]) << '\n';
}

void write_joint_csv(std::ostream& out, const JointDistribution<Rational>& psi) {
  out << "# concgraph joint v1\n# n=" << psi.n() << "\nstate_bitmask,numerator,denominator\n";
  for (State x = 0; x < psi.states(); ++x) {
    out << x << ',' << boost::multiprecision::numerator(psi[x]) << ',' << boost::multiprecision::denominator(psi[x])
        << '\n';
  }
}

namespace {

template <class T, class ParseRow>
JointDistribution<T> read_joint(std::istream& in, std::string_view header, std::size_t columns, ParseRow&& parse_row) {
  CsvReader reader(in);
  reader.expect_header(header);
  const auto n = parse_number<std::size_t>(reader.meta("n"), reader);
  if (n == 0 || n > JointDistribution<T>::max_dimension) reader.fail(fmt::format("n={} out of range", n));
  std::vector<T> table(std::size_t{1} << n, T(0));
  std::vector<bool> seen(table.size(), false);
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, ',');
    if (f.size() != columns) reader.fail(fmt::format("expected '{}'", header));
    const auto x = parse_number<State>(f[0], reader);
    if (x >= table.size()) reader.fail(fmt::format("state {} out of range", x));
    if (seen[x]) reader.fail(fmt::format("state {} listed twice", x));
    seen[x] = true;
    table[x] = parse_row(f, reader);
  }
  try {
    return JointDistribution<T>(n, std::move(table));
  } catch (const DomainError& e) {
    throw IoError(e.what());
  }
}

}  // namespace

JointDistribution<double> read_joint_csv(std::istream& in) {
  return read_joint<double>(in, "state_bitmask,probability", 2, [](const std::vector<std::string>& f, const CsvReader& r) {
    return parse_number<double>(f[1], r);
  });
}

JointDistribution<Rational> read_joint_csv_exact(std::istream& in) {
  return read_joint<Rational>(
      in, "state_bitmask,numerator,denominator", 3, [](const std::vector<std::string>& f, const CsvReader& r) {
        using boost::multiprecision::cpp_int;
        try {
          const cpp_int num(f[1]);
          const cpp_int den(f[2]);
          if (den <= 0) r.fail("denominator must be positive");
          return Rational(num, den);
        } catch (const std::runtime_error& e) {
          if (dynamic_cast<const IoError*>(&e)) throw;
          r.fail(fmt::format("invalid rational {}/{}", f[1], f[2]));
        }
      });
}

// ---------------------------------------------------------------------------
// Traces and reports

void write_trace_csv(std::ostream& out, std::span<const WaveTrace> traces) {
  out << "channel,step,direction,node_set_hash,matched_template\n";
  for (const auto& t : traces) {
    for (const auto& f : t.fronts) {
      out << fmt::format("{},{},{},{:016x},{}\n", t.channel, f.step, format_word(f.exponents), node_set_hash(f.nodes),
                         f.matched_template ? std::to_string(*f.matched_template) : std::string());
    }
  }
}

Json to_json(const SymmetryReport& report) {
  Json j;
  j["label"] = report.label;
  j["distortion"] = report.distortion;
  j["exact"] = report.exact;
  j["null_percentile"] = report.null_percentile ? Json(*report.null_percentile) : Json(nullptr);
  j["border_mask"] = report.border_mask;
  j["permutation"] = std::vector<NodeId>(report.permutation.map().begin(), report.permutation.map().end());
  return j;
}

Json to_json(const DecodeResult& result) {
  Json j;
  j["decodable"] = result.decodable;
  if (result.decodable) {
    j["what"] = result.what;
    j["where"] = result.where;
    j["dt"] = result.dt;
  } else {
    j["reason"] = result.reason;
  }
  Json arrivals = Json::object();
  for (const auto& [id, step] : result.arrivals) arrivals[std::to_string(id)] = step;
  j["arrivals"] = arrivals;
  return j;
}

Json to_json(const GroupReport& report) {
  return Json{{"order", report.order},
              {"truncated", report.truncated},
              {"max_distortion", report.max_distortion},
              {"closed", report.closed}};
}

Json to_json(const HomogeneityReport& report) {
  return Json{{"mean_rate", report.mean_rate},
              {"max_deviation", report.max_deviation},
              {"worst_node", report.worst_node},
              {"tolerance", report.tolerance},
              {"homogeneous", report.homogeneous}};
}

// ---------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  });
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  with_output(path, [&](std::ostream& out) { out << text; });
}

}  // namespace concgraph
