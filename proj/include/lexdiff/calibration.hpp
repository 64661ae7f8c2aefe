#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexdiff/engine.hpp"
#include "lexdiff/identity.hpp"
#include "lexdiff/network.hpp"

namespace lexdiff {

struct CalibrationTarget {
  std::string word;
  std::vector<AgentId> seeds;
  double empirical_uses = 0.0;
  double multiplier = 10.0;  // simulated uses per empirical use
  /// Stickiness to simulate with during global tuning; absent means the
  /// settings' base stickiness.
  std::optional<double> stickiness;

  double target_uses() const noexcept { return multiplier * empirical_uses; }
  /// Throws InputError on a nonpositive multiplier, negative count or no seeds.
  void validate() const;
};

struct GlobalGrid {
  std::vector<double> q{0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  std::vector<double> r{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<std::uint32_t> theta{50, 100, 150, 200};

  std::size_t size() const noexcept { return q.size() * r.size() * theta.size(); }
};

/// {0.10, 0.11, ..., 1.00}.
std::vector<double> default_stickiness_grid();

struct CalibrationSettings {
  /// Mode, stopping rule and default stickiness for every simulated run; the
  /// tuned fields are overwritten per cell.
  SimulationConfig base;
  std::size_t trials_per_cell = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Seed of trial `trial` for `word`. Shared by every grid cell so cells are
/// compared on common random numbers.
std::uint64_t calibration_trial_seed(std::uint64_t seed, const std::string& word, std::size_t trial);

struct GlobalCell {
  double q = 0.0;
  double r = 0.0;
  std::uint32_t theta = 0;
  double mse = 0.0;
  std::vector<double> mean_uses;  // per target
};

struct GlobalCalibration {
  double q = 0.0;
  double r = 0.0;
  std::uint32_t theta = 0;
  double mse = 0.0;
  std::vector<GlobalCell> surface;  // grid order: q, then r, then theta
};

/// Grid cell minimising the mean over targets of (mean simulated uses -
/// multiplier * empirical uses)^2. Ties go to the lexicographically smallest
/// (Q, r, theta).
GlobalCalibration tune_global(std::span<const CalibrationTarget> targets, const SocialGraph& graph,
                              const IdentityTable& identities, const GlobalGrid& grid,
                              const CalibrationSettings& settings);

struct StickinessCell {
  double stickiness = 0.0;
  double mean_uses = 0.0;
  double error = 0.0;  // |mean_uses - target|
};

struct StickinessCalibration {
  std::string word;
  double stickiness = 0.0;
  double error = 0.0;
  std::vector<StickinessCell> surface;
};

/// Grid value minimising |mean simulated uses - target|, ties to the smaller
/// value. Q, r and theta come from settings.base.
StickinessCalibration tune_stickiness(const CalibrationTarget& target, const SocialGraph& graph,
                                      const IdentityTable& identities, std::span<const double> grid,
                                      const CalibrationSettings& settings);

/// Seeded uniform sample without replacement of round(fraction * n) indices
/// (at least one), in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed);

/// Structured reports with the full objective surface.
std::string to_json(const GlobalCalibration& calibration);
std::string to_json(const StickinessCalibration& calibration);

}  // namespace lexdiff
