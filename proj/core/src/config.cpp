#include "concgraph/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include "concgraph/error.hpp"
#include "concgraph/io.hpp"

namespace concgraph {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <class T>
bool parse_exact(const std::string& text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

ConfigSection::ConfigSection(std::string name, boost::property_tree::ptree tree)
    : name_(std::move(name)), tree_(std::move(tree)) {}

bool ConfigSection::has(const std::string& key) const { return tree_.find(key) != tree_.not_found(); }

std::optional<std::string> ConfigSection::text(const std::string& key) {
  const auto it = tree_.find(key);
  if (it == tree_.not_found()) return std::nullopt;
  used_.insert(key);
  return trim(it->second.data());
}

void ConfigSection::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(fmt::format("[{}] {}: {}", name_, key, message));
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) {
  return text(key).value_or(fallback);
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) {
  const auto t = text(key);
  if (!t) return fallback;
  if (*t == "true" || *t == "yes" || *t == "on" || *t == "1") return true;
  if (*t == "false" || *t == "no" || *t == "off" || *t == "0") return false;
  fail(key, fmt::format("'{}' is not a boolean", *t));
}

long long ConfigSection::get_int(const std::string& key, long long fallback) {
  const auto t = text(key);
  if (!t) return fallback;
  long long v = 0;
  if (!parse_exact(*t, v)) fail(key, fmt::format("'{}' is not an integer", *t));
  return v;
}

std::uint64_t ConfigSection::get_u64(const std::string& key, std::uint64_t fallback) {
  const auto t = text(key);
  if (!t) return fallback;
  std::uint64_t v = 0;
  if (!parse_exact(*t, v)) fail(key, fmt::format("'{}' is not a nonnegative integer", *t));
  return v;
}

double ConfigSection::get_double(const std::string& key, double fallback) {
  const auto t = text(key);
  if (!t) return fallback;
  double v = 0;
  if (!parse_exact(*t, v)) fail(key, fmt::format("'{}' is not a number", *t));
  return v;
}

std::vector<std::string> ConfigSection::get_list(const std::string& key, const std::vector<std::string>& fallback) {
  const auto t = text(key);
  if (!t) return fallback;
  std::vector<std::string> out;
  std::istringstream ss(*t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ConfigSection::finish() const {
  for (const auto& [key, value] : tree_) {
    if (!used_.contains(key)) throw ConfigError(fmt::format("[{}] unknown key '{}'", name_, key));
  }
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse(text, path.parent_path());
}

ConfigFile ConfigFile::parse(const std::string& text, std::filesystem::path base_dir) {
  ConfigFile f;
  f.base_dir_ = std::move(base_dir);
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, f.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  return f;
}

bool ConfigFile::has_section(const std::string& name) const { return tree_.find(name) != tree_.not_found(); }

ConfigSection ConfigFile::section(const std::string& name) const {
  const auto it = tree_.find(name);
  return ConfigSection(name, it == tree_.not_found() ? boost::property_tree::ptree() : it->second);
}

std::filesystem::path ConfigFile::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

void ConfigFile::check_sections(const std::set<std::string>& known) const {
  for (const auto& [name, child] : tree_) {
    if (known.contains(name)) continue;
    if (child.empty()) throw ConfigError(fmt::format("key '{}' outside any section", name));
    throw ConfigError(fmt::format("unknown section [{}]", name));
  }
}

WorldConfig parse_world_config(ConfigSection& s, const ConfigFile& file) {
  WorldConfig c;
  c.kind = parse_world_kind(s.get_string("kind", to_string(c.kind)));
  for (const auto& inv : s.get_list("invariances", {})) c.invariances.push_back(parse_invariance(inv));
  c.anisotropy = s.get_double("anisotropy", c.anisotropy);
  c.rotation_scramble = s.get_bool("rotation_scramble", c.rotation_scramble);
  const auto fpv = s.get_int("frames_per_video", c.frames_per_video);
  if (fpv < 1) throw ConfigError("[world] frames_per_video must be >= 1");
  c.frames_per_video = static_cast<std::uint32_t>(fpv);
  c.toroidal = s.get_bool("toroidal", c.toroidal);

  auto small_int = [&](const char* key, int fallback) { return static_cast<int>(s.get_int(key, fallback)); };
  c.width = small_int("width", c.width);
  c.height = small_int("height", c.height);
  c.orientations = small_int("orientations", c.orientations);
  c.scales = small_int("scales", c.scales);
  c.contours_per_scene = small_int("contours_per_scene", c.contours_per_scene);
  c.line_probability = s.get_double("line_probability", c.line_probability);
  c.min_line_length = s.get_double("min_line_length", c.min_line_length);
  c.max_line_length = s.get_double("max_line_length", c.max_line_length);
  c.min_arc_radius = s.get_double("min_arc_radius", c.min_arc_radius);
  c.max_arc_radius = s.get_double("max_arc_radius", c.max_arc_radius);
  c.min_arc_sweep_deg = s.get_double("min_arc_sweep_deg", c.min_arc_sweep_deg);
  c.max_arc_sweep_deg = s.get_double("max_arc_sweep_deg", c.max_arc_sweep_deg);

  c.bands = small_int("bands", c.bands);
  c.bands_per_octave = small_int("bands_per_octave", c.bands_per_octave);
  c.partials = small_int("partials", c.partials);
  c.partial_decay = s.get_double("partial_decay", c.partial_decay);

  const auto table_path = s.text("table_path");
  const auto table = s.text("table");
  const auto n = s.get_int("n", 0);
  if (table_path && table) throw ConfigError("[world] give either table or table_path, not both");
  if (table_path) {
    c.table_path = *table_path;
    try {
      c.table = with_input(file.resolve(*table_path), [](std::istream& in) { return read_joint_csv(in); });
    } catch (const Error& e) {
      throw ConfigError(fmt::format("[world] table_path: {}", e.what()));
    }
  } else if (table) {
    if (n < 1 || n > 20) throw ConfigError("[world] inline table needs n in 1..20");
    try {
      if (*table == "uniform") {
        c.table = JointDistribution<double>::uniform(static_cast<std::size_t>(n));
      } else {
        std::vector<double> probs;
        std::istringstream ss(*table);
        std::string tok;
        while (ss >> tok) {
          double p = 0;
          if (!parse_exact(tok, p)) throw ConfigError(fmt::format("[world] table: '{}' is not a number", tok));
          probs.push_back(p);
        }
        c.table = JointDistribution<double>(static_cast<std::size_t>(n), std::move(probs));
      }
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("[world] table: {}", e.what()));
    }
  } else if (n != 0) {
    throw ConfigError("[world] n is only used with an inline table");
  }
  if (c.kind == WorldKind::explicit_table && !c.table) {
    throw ConfigError("[world] explicit_table needs table or table_path");
  }
  if (c.anisotropy < 0.0 || c.anisotropy > 1.0) throw ConfigError("[world] anisotropy must lie in [0, 1]");
  s.finish();
  return c;
}

}  // namespace concgraph
