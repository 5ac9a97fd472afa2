#include "concgraph/appendix.hpp"

#include <sstream>

namespace concgraph {

std::string to_string(const Rational& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}

std::size_t AppendixReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const AppendixTrial& t) { return !(t.invariant && t.holds); }));
}

Json AppendixReport::to_json() const {
  Json j;
  j["m"] = m;
  j["trials"] = trials.size();
  j["failures"] = failures();
  Json rows = Json::array();
  for (const auto& t : trials) {
    rows.push_back(Json{{"n", t.n},
                        {"tau", std::vector<NodeId>(t.tau.map().begin(), t.tau.map().end())},
                        {"group_order", t.group_order},
                        {"invariant", t.invariant},
                        {"holds", t.holds},
                        {"subsets_checked", t.subsets_checked},
                        {"max_discrepancy", to_string(t.max_discrepancy)}});
  }
  j["details"] = rows;
  return j;
}

AppendixReport verify_appendix(std::size_t trials, std::uint64_t seed, std::size_t m, std::size_t min_n,
                               std::size_t max_n) {
  if (min_n < 2 || min_n > max_n || max_n > JointDistribution<Rational>::max_dimension) {
    throw DomainError(fmt::format("verify_appendix: n range [{}, {}] invalid", min_n, max_n));
  }
  if (m < 1 || m > min_n) throw DomainError(fmt::format("verify_appendix: m={} outside 1..{}", m, min_n));
  AppendixReport report;
  report.m = m;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::for_draw(seed, t);
    const std::size_t n = min_n + static_cast<std::size_t>(rng.below(max_n - min_n + 1));
    Permutation tau = Permutation::random(n, rng);
    while (tau.is_identity()) tau = Permutation::random(n, rng);
    const auto group = generate_group(std::vector<Permutation>{tau});
    const auto psi = symmetrize(random_rational_distribution(n, rng), group.elements);
    const auto r = verify_inheritance(psi, tau, m);
    report.trials.push_back(
        AppendixTrial{n, tau, group.elements.size(), r.invariant, r.holds, r.subsets_checked, r.max_discrepancy});
  }
  return report;
}

ConverseExample converse_example() {
  const Rational half(1, 2);
  const Rational quarter(1, 4);
  std::vector<Rational> table(8, Rational(0));
  // bit i = x_i; x0 = x1, x2 independent
  table[0b000] = quarter;
  table[0b011] = quarter;
  table[0b100] = quarter;
  table[0b111] = quarter;
  ConverseExample ex{JointDistribution<Rational>(3, std::move(table)), Permutation::cycle(3), {}, false, {}};
  for (NodeId i = 0; i < 3; ++i) {
    const NodeId mu[] = {i};
    ex.on_probability.push_back(project_ordered(ex.psi, mu)[1]);
  }
  ex.singles_equal = ex.on_probability[0] == half && ex.on_probability[1] == half && ex.on_probability[2] == half;
  ex.pairs = verify_inheritance(ex.psi, ex.tau, 2);
  return ex;
}

Json ConverseExample::to_json() const {
  Json j;
  Json singles = Json::array();
  for (const auto& p : on_probability) singles.push_back(to_string(p));
  j["tau"] = std::vector<NodeId>(tau.map().begin(), tau.map().end());
  j["on_probability"] = singles;
  j["singles_equal"] = singles_equal;
  j["invariant"] = pairs.invariant;
  if (pairs.breaking_state) j["breaking_state"] = *pairs.breaking_state;
  if (pairs.counterexample) j["counterexample_mu"] = *pairs.counterexample;
  j["max_pair_discrepancy"] = to_string(pairs.max_discrepancy);
  return j;
}

}  // namespace concgraph
