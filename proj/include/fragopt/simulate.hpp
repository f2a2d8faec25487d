#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "fragopt/energy.hpp"
#include "fragopt/model.hpp"
#include "fragopt/rng.hpp"

namespace fragopt {

enum class Stage { FirstDevice, SecondDevice, Exited };

struct FragmentState {
  double size = 1.0;
  Stage stage = Stage::FirstDevice;
};

struct SimOutput {
  double energy = 0.0;
  /// Sizes of the frozen fragments, nonincreasing. Kept as plain doubles:
  /// the sum may exceed 1 by accumulated rounding.
  std::vector<double> frozen_partition;
  std::size_t n_events = 0;
};

struct SimOptions {
  std::size_t max_events = 100'000'000;
  /// When set, one CSV row (size, atom, energy) per dislocation, no header.
  std::ostream* event_log = nullptr;
};

/// Breaks the unit fragment with `model` until every fragment is below eta.
/// The model must have finitely many atoms.
SimOutput simulate_one_step(const FragmentationModel& model, double eta, Stream& rng, const SimOptions& opts = {});
SimOutput simulate_one_step(const FragmentationModel& model, double eta, std::uint64_t seed);

/// Device 1 down to eta, then each remaining fragment x >= eta0 goes through
/// device 2 as x times an independent unit run down to eta0 / x.
SimOutput simulate_two_step(const FragmentationModel& m1, const FragmentationModel& m2, const TwoStepConfig& cfg,
                            Stream& rng, const SimOptions& opts = {});
SimOutput simulate_two_step(const FragmentationModel& m1, const FragmentationModel& m2, const TwoStepConfig& cfg,
                            std::uint64_t seed);

using SimOp = std::function<SimOutput(Stream&)>;

/// Mean energy and its standard error over replicas; replica i draws from
/// Stream(seed, i).
EnergyEstimate estimate_mean(const SimOp& op, std::size_t n_replicas, std::uint64_t seed);

/// Line of descent of a fragment chosen at every dislocation with
/// probability proportional to (child size)^alpha, atoms being chosen with
/// weight w * sum s_j^alpha. Returns -log(size) after each dislocation
/// until the size drops below eta.
std::vector<double> tagged_fragment(const FragmentationModel& model, double eta, Stream& rng);

}  // namespace fragopt
