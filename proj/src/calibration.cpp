#include "lexdiff/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "json.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/parallel.hpp"
#include "lexdiff/rng.hpp"

namespace lexdiff {

void CalibrationTarget::validate() const {
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) throw InputError("usage multiplier must be positive");
  if (!(empirical_uses >= 0.0) || !std::isfinite(empirical_uses)) throw InputError("empirical use count must be >= 0");
  if (seeds.empty()) throw InputError("calibration target " + word + " has no seeds");
  if (stickiness && !(*stickiness >= 0.0 && *stickiness <= 1.0)) throw InputError("stickiness must lie in [0,1]");
}

std::vector<double> default_stickiness_grid() {
  std::vector<double> out;
  for (int k = 10; k <= 100; ++k) out.push_back(k / 100.0);
  return out;
}

std::uint64_t calibration_trial_seed(std::uint64_t seed, const std::string& word, std::size_t trial) {
  return derive_seed(seed, {0x43414C49ULL, fnv1a64(word), trial});
}

namespace {

void check_settings(const CalibrationSettings& settings) {
  if (settings.trials_per_cell < 1) throw InputError("calibration needs at least one trial per cell");
  if (uses_shuffled_graph(settings.base.mode)) {
    throw InputError("calibration simulates on the observed graph; mode " + std::string(to_string(settings.base.mode)) +
                     " rewires it");
  }
  settings.base.validate();
}

std::uint64_t run_uses(const SimulationConfig& config, const SocialGraph& graph, const SeededSimulation& prepared) {
  RunOptions options;
  options.keep_adopters = false;
  return run_prepared(config, graph, prepared, options).total_uses;
}

}  // namespace

GlobalCalibration tune_global(std::span<const CalibrationTarget> targets, const SocialGraph& graph,
                              const IdentityTable& identities, const GlobalGrid& grid,
                              const CalibrationSettings& settings) {
  if (targets.empty()) throw InputError("global tuning needs at least one word");
  if (grid.size() == 0) throw InputError("global tuning grids must be nonempty");
  check_settings(settings);
  for (const auto& t : targets) t.validate();
  for (double q : grid.q) {
    if (!(q > 0.0 && q < 1.0)) throw InputError("Q grid values must lie in (0,1)");
  }
  for (double r : grid.r) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError("r grid values must lie in [0,1]");
  }
  for (auto th : grid.theta) {
    if (th < 1) throw InputError("theta grid values must be >= 1");
  }

  const std::size_t nt = targets.size(), nq = grid.q.size(), nr = grid.r.size(), nth = grid.theta.size();
  const std::size_t trials = settings.trials_per_cell;

  // The identity signal depends on Q and the seeds only.
  std::vector<SeededSimulation> prepared(nt * nq);
  parallel_for(prepared.size(), settings.threads, [&](std::size_t k) {
    SimulationConfig c = settings.base;
    c.q = grid.q[k % nq];
    prepared[k] = seed_simulation(targets[k / nq].seeds, c, graph, &identities);
  });

  const std::size_t cells = grid.size();
  std::vector<std::uint64_t> uses(cells * nt * trials);
  parallel_for(uses.size(), settings.threads, [&](std::size_t job) {
    const std::size_t trial = job % trials;
    const std::size_t t = (job / trials) % nt;
    const std::size_t cell = job / (trials * nt);
    const std::size_t qi = cell / (nr * nth), ri = (cell / nth) % nr, hi = cell % nth;
    SimulationConfig c = settings.base;
    c.q = grid.q[qi];
    c.r = grid.r[ri];
    c.theta = grid.theta[hi];
    c.stickiness = targets[t].stickiness.value_or(settings.base.stickiness);
    c.seed = calibration_trial_seed(settings.seed, targets[t].word, trial);
    uses[job] = run_uses(c, graph, prepared[t * nq + qi]);
  });

  GlobalCalibration out;
  out.surface.reserve(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    GlobalCell gc;
    gc.q = grid.q[cell / (nr * nth)];
    gc.r = grid.r[(cell / nth) % nr];
    gc.theta = grid.theta[cell % nth];
    double sq = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      double sum = 0.0;
      for (std::size_t k = 0; k < trials; ++k) sum += static_cast<double>(uses[(cell * nt + t) * trials + k]);
      const double mean = sum / static_cast<double>(trials);
      gc.mean_uses.push_back(mean);
      const double diff = mean - targets[t].target_uses();
      sq += diff * diff;
    }
    gc.mse = sq / static_cast<double>(nt);
    out.surface.push_back(std::move(gc));
  }
  const GlobalCell* best = &out.surface.front();
  for (const auto& gc : out.surface) {
    if (gc.mse < best->mse ||
        (gc.mse == best->mse && std::tie(gc.q, gc.r, gc.theta) < std::tie(best->q, best->r, best->theta))) {
      best = &gc;
    }
  }
  out.q = best->q;
  out.r = best->r;
  out.theta = best->theta;
  out.mse = best->mse;
  return out;
}

StickinessCalibration tune_stickiness(const CalibrationTarget& target, const SocialGraph& graph,
                                      const IdentityTable& identities, std::span<const double> grid,
                                      const CalibrationSettings& settings) {
  if (grid.empty()) throw InputError("stickiness grid must be nonempty");
  for (double s : grid) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("stickiness grid values must lie in [0,1]");
  }
  check_settings(settings);
  target.validate();

  const auto prepared = seed_simulation(target.seeds, settings.base, graph, &identities);
  const std::size_t trials = settings.trials_per_cell;
  std::vector<std::uint64_t> uses(grid.size() * trials);
  parallel_for(uses.size(), settings.threads, [&](std::size_t job) {
    SimulationConfig c = settings.base;
    c.stickiness = grid[job / trials];
    c.seed = calibration_trial_seed(settings.seed, target.word, job % trials);
    uses[job] = run_uses(c, graph, prepared);
  });

  StickinessCalibration out;
  out.word = target.word;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (std::size_t k = 0; k < trials; ++k) sum += static_cast<double>(uses[g * trials + k]);
    const double mean = sum / static_cast<double>(trials);
    out.surface.push_back(StickinessCell{grid[g], mean, std::abs(mean - target.target_uses())});
  }
  const StickinessCell* best = &out.surface.front();
  for (const auto& cell : out.surface) {
    if (cell.error < best->error || (cell.error == best->error && cell.stickiness < best->stickiness)) best = &cell;
  }
  out.stickiness = best->stickiness;
  out.error = best->error;
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) throw InputError("cannot sample from an empty list");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("sample fraction must lie in (0,1]");
  const std::size_t k =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CounterRng rng(seed, 0x53414D50ULL);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string to_json(const GlobalCalibration& c) {
  nlohmann::json surface = nlohmann::json::array();
  for (const auto& cell : c.surface) {
    surface.push_back({{"q", cell.q}, {"r", cell.r}, {"theta", cell.theta}, {"mse", cell.mse}, {"mean_uses", cell.mean_uses}});
  }
  nlohmann::json doc{{"best", {{"q", c.q}, {"r", c.r}, {"theta", c.theta}, {"mse", c.mse}}}, {"surface", surface}};
  return doc.dump(2) + "\n";
}

std::string to_json(const StickinessCalibration& c) {
  nlohmann::json surface = nlohmann::json::array();
  for (const auto& cell : c.surface) {
    surface.push_back({{"stickiness", cell.stickiness}, {"mean_uses", cell.mean_uses}, {"error", cell.error}});
  }
  nlohmann::json doc{{"word", c.word}, {"best", {{"stickiness", c.stickiness}, {"error", c.error}}}, {"surface", surface}};
  return doc.dump(2) + "\n";
}

}  // namespace lexdiff
