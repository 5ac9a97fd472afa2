#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "concgraph/stimulus.hpp"

namespace concgraph {

/// One `[section]` of an INI config. Every key must be read before finish(), so a typo
/// surfaces as a ConfigError instead of being silently ignored.
class ConfigSection {
 public:
  ConfigSection(std::string name, boost::property_tree::ptree tree);

  const std::string& name() const noexcept { return name_; }
  bool has(const std::string& key) const;
  std::optional<std::string> text(const std::string& key);

  std::string get_string(const std::string& key, const std::string& fallback);
  bool get_bool(const std::string& key, bool fallback);
  long long get_int(const std::string& key, long long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  /// Comma-separated list; empty entries dropped.
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback);

  /// Throws ConfigError naming any key that was never read.
  void finish() const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  std::string name_;
  boost::property_tree::ptree tree_;
  std::set<std::string> used_;
};

class ConfigFile {
 public:
  static ConfigFile load(const std::filesystem::path& path);
  static ConfigFile parse(const std::string& text, std::filesystem::path base_dir = {});

  bool has_section(const std::string& name) const;
  /// Empty section when absent.
  ConfigSection section(const std::string& name) const;
  /// Paths in the config are resolved against the file's directory.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::filesystem::path resolve(const std::string& path) const;
  /// Throws ConfigError for sections outside `known` and for keys outside any section.
  void check_sections(const std::set<std::string>& known) const;

 private:
  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
};

/// Reads the world keys (kind, invariances, grid and generator parameters, table or
/// table_path). The seed is not a world key: the harness derives it from the master seed.
WorldConfig parse_world_config(ConfigSection& section, const ConfigFile& file);

}  // namespace concgraph
