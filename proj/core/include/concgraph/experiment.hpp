#pragma once

#include <cstdint>
#include <string>

#include "concgraph/config.hpp"
#include "concgraph/io.hpp"
#include "concgraph/stimulus.hpp"
#include "concgraph/symmetry.hpp"

namespace concgraph {

/// Two groups watch the same anisotropic edge world with equal budgets and seeds; group B
/// additionally sees every video under a random rotation.
struct AbConfig {
  WorldConfig world;  // rotation_scramble is set per group
  std::uint64_t seed = 1;
  std::uint64_t draws_a = 100'000;
  std::uint64_t draws_b = 100'000;
  std::size_t null_samples = 1'000;
  std::size_t probes = 64;
  std::size_t bootstrap = 20;
  unsigned shards = 1;
  LocalSearchOptions search;

  std::string canonical() const;
};

AbConfig default_ab_config();
/// Reads [world] and [ab]; unspecified world keys take the experiment defaults.
AbConfig parse_ab_config(const ConfigFile& file);

struct AbGroupResult {
  std::string name;
  bool rotation_scramble = false;
  std::uint64_t draws = 0;
  double distortion = 0.0;  // rotation90
  double null_q01 = 0.0;
  double null_percentile = 0.0;
  bool below_first_percentile = false;
  /// Poisson-bootstrap 5% and 95% quantiles of the distortion.
  double bootstrap_lo = 0.0;
  double bootstrap_hi = 0.0;
  /// The bootstrap interval lies entirely on one side of the null's 1st percentile.
  bool separable = false;
  /// Fraction of nodes where the locally searched symmetry agrees with the true rotation.
  double search_agreement = 0.0;
  bool search_complete = false;
  /// Recognition proxy: share of rotated probes read out as their unrotated template.
  double recognition = 0.0;
};

struct AbReport {
  AbGroupResult a;
  AbGroupResult b;
  double ratio = 0.0;  // distortion_B / distortion_A
  /// Either group's bootstrap interval straddles the null's 1st percentile, or the two
  /// groups' intervals overlap.
  bool insufficient_sample = false;

  Json to_json() const;
};

/// Throws DomainError when the two budgets differ (the comparison would be confounded).
AbReport run_ab_experiment(const AbConfig& config);

}  // namespace concgraph
