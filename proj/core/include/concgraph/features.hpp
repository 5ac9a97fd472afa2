#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "concgraph/rng.hpp"
#include "concgraph/stimulus.hpp"

namespace concgraph {

enum class BankMode { learned, predefined };

struct Detector {
  std::vector<double> weights;  // unit norm
  std::optional<DetectorGeometry> geometry;
};

/// Feed-forward detector bank trained by hard winner-take-all competitive Hebbian learning.
class DetectorBank {
 public:
  static constexpr std::size_t no_winner = static_cast<std::size_t>(-1);

  /// Normalizes every weight vector; throws DomainError on ragged or zero vectors.
  DetectorBank(std::vector<Detector> detectors, double learning_rate, BankMode mode);

  /// `count` detectors initialized from distinct random rows of `samples` (zero rows skipped).
  static DetectorBank from_samples(std::span<const std::vector<double>> samples, std::size_t count,
                                   double learning_rate, Rng& rng);

  /// One detector per edge-world node: uniform weight over the node's receptive field in its
  /// orientation channel of the world's sub-pixel raster.
  static DetectorBank predefined_edge_bank(const EdgeWorld& world, int subpixels = 2);

  std::size_t size() const noexcept { return detectors_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const Detector& detector(std::size_t i) const { return detectors_.at(i); }
  std::span<const Detector> detectors() const noexcept { return detectors_; }
  double learning_rate() const noexcept { return learning_rate_; }
  BankMode mode() const noexcept { return mode_; }
  /// Zero inputs passed to train_step (each one a no-op).
  std::size_t zero_inputs() const noexcept { return zero_inputs_; }

  /// argmax_j <w_j, input>, ties to the lowest index.
  std::size_t winner(std::span<const double> input) const;

  /// Moves the winner toward the normalized input by the learning rate and renormalizes.
  /// Returns the winner, or `no_winner` for a zero input.
  std::size_t train_step(std::span<const double> input);

 private:
  void check_dimension(std::span<const double> input) const;

  std::vector<Detector> detectors_;
  std::size_t dimension_ = 0;
  double learning_rate_;
  BankMode mode_;
  std::size_t zero_inputs_ = 0;
};

/// Detector i is on iff <w_i, input> >= threshold, with w_i unit norm. `threshold` in (0, 1].
Observation activate(const DetectorBank& bank, std::span<const double> input, double threshold,
                     std::uint64_t timestamp = 0);

}  // namespace concgraph
