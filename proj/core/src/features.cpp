#include "concgraph/features.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "concgraph/error.hpp"

namespace concgraph {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void normalize_in_place(std::vector<double>& w) {
  const double len = norm(w);
  if (len == 0.0) throw DomainError("detector bank: zero weight vector");
  for (auto& x : w) x /= len;
}

}  // namespace

DetectorBank::DetectorBank(std::vector<Detector> detectors, double learning_rate, BankMode mode)
    : detectors_(std::move(detectors)), learning_rate_(learning_rate), mode_(mode) {
  if (detectors_.empty()) throw DomainError("detector bank: no detectors");
  if (!(learning_rate_ > 0.0)) throw DomainError("detector bank: learning rate must be > 0");
  dimension_ = detectors_.front().weights.size();
  for (auto& d : detectors_) {
    if (d.weights.size() != dimension_) throw DomainError("detector bank: weight vectors differ in dimension");
    normalize_in_place(d.weights);
  }
}

DetectorBank DetectorBank::from_samples(std::span<const std::vector<double>> samples, std::size_t count,
                                        double learning_rate, Rng& rng) {
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (norm(samples[i]) > 0.0) usable.push_back(i);
  }
  if (usable.size() < count) {
    throw DomainError(fmt::format("detector bank: {} nonzero samples for {} detectors", usable.size(), count));
  }
  // Partial Fisher-Yates: the first `count` entries become a uniform random subset.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(usable.size() - i));
    std::swap(usable[i], usable[j]);
  }
  std::vector<Detector> detectors;
  for (std::size_t i = 0; i < count; ++i) detectors.push_back(Detector{samples[usable[i]], std::nullopt});
  return DetectorBank(std::move(detectors), learning_rate, BankMode::learned);
}

DetectorBank DetectorBank::predefined_edge_bank(const EdgeWorld& world, int subpixels) {
  const RasterLayout layout = world.raster_layout(subpixels);
  std::vector<Detector> detectors;
  detectors.reserve(world.n());
  for (const auto& g : world.geometry()) {
    std::vector<double> w(layout.dimension(), 0.0);
    const int side = (1 << g.scale_level) * subpixels;
    const double value = 1.0 / side;
    const int bin = static_cast<int>(std::lround(g.omega * world.config().orientations / 180.0));
    const int sx0 = static_cast<int>(g.x) * subpixels;
    const int sy0 = static_cast<int>(g.y) * subpixels;
    for (int sy = sy0; sy < sy0 + side; ++sy) {
      for (int sx = sx0; sx < sx0 + side; ++sx) w[layout.index(sx, sy, bin)] = value;
    }
    detectors.push_back(Detector{std::move(w), g});
  }
  // Unit learning rate is irrelevant for predefined banks; it is never used.
  return DetectorBank(std::move(detectors), 1.0, BankMode::predefined);
}

void DetectorBank::check_dimension(std::span<const double> input) const {
  if (input.size() != dimension_) {
    throw DomainError(fmt::format("detector bank: input dimension {} != bank dimension {}", input.size(), dimension_));
  }
}

std::size_t DetectorBank::winner(std::span<const double> input) const {
  check_dimension(input);
  std::size_t best = 0;
  double best_score = dot(detectors_[0].weights, input);
  for (std::size_t j = 1; j < detectors_.size(); ++j) {
    const double s = dot(detectors_[j].weights, input);
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

std::size_t DetectorBank::train_step(std::span<const double> input) {
  if (mode_ != BankMode::learned) throw DomainError("detector bank: train_step on a predefined bank");
  check_dimension(input);
  const double len = norm(input);
  if (len == 0.0) {
    ++zero_inputs_;
    return no_winner;
  }
  const std::size_t j = winner(input);
  auto& w = detectors_[j].weights;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += learning_rate_ * (input[i] / len - w[i]);
  normalize_in_place(w);
  return j;
}

Observation activate(const DetectorBank& bank, std::span<const double> input, double threshold,
                     std::uint64_t timestamp) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("activate: threshold must lie in (0, 1]");
  if (input.size() != bank.dimension()) throw DomainError("activate: input dimension mismatch");
  // Relative slack of 1e-12 so that an input equal to a unit weight vector reaches 1.0.
  const double cut = threshold * (1.0 - 1e-12);
  Observation obs{timestamp, {}};
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (dot(bank.detector(i).weights, input) >= cut) obs.active.push_back(static_cast<NodeId>(i));
  }
  return obs;
}

}  // namespace concgraph
