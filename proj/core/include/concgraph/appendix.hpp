#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concgraph/io.hpp"
#include "concgraph/marginals.hpp"

namespace concgraph {

struct AppendixTrial {
  std::size_t n = 0;
  Permutation tau;
  std::size_t group_order = 0;
  bool invariant = false;
  bool holds = false;
  std::size_t subsets_checked = 0;
  Rational max_discrepancy;
};

struct AppendixReport {
  std::size_t m = 0;
  std::vector<AppendixTrial> trials;

  std::size_t failures() const;
  Json to_json() const;
};

/// Random rational tables with n in [min_n, max_n], a random non-identity tau, symmetrized
/// over the cyclic group of tau, then every m-subset marginal identity checked exactly.
AppendixReport verify_appendix(std::size_t trials, std::uint64_t seed, std::size_t m = 2, std::size_t min_n = 4,
                               std::size_t max_n = 8);

/// n = 3 table with x0 = x1 (fair coin) and x2 an independent fair coin. Every single-node
/// marginal is 1/2, yet the table is not invariant under the 3-cycle tau and the pair
/// marginals disagree.
struct ConverseExample {
  JointDistribution<Rational> psi;
  Permutation tau;
  std::vector<Rational> on_probability;  // P(x_i = 1)
  bool singles_equal = false;
  InheritanceReport<Rational> pairs;

  Json to_json() const;
};

ConverseExample converse_example();

std::string to_string(const Rational& r);

}  // namespace concgraph
