#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexdiff/calibration.hpp"
#include "lexdiff/engine.hpp"
#include "lexdiff/pathways.hpp"
#include "lexdiff/regions.hpp"
#include "lexdiff/regression.hpp"
#include "lexdiff/spatial.hpp"
#include "lexdiff/world.hpp"

namespace lexdiff {

struct PlanCalibration {
  bool tune_global = false;
  bool tune_stickiness = false;
  double multiplier = 10.0;
  std::size_t trials_per_cell = 3;
  double sample_fraction = 0.2;  // words used for global tuning
  GlobalGrid grid;
  std::vector<double> stickiness_grid = default_stickiness_grid();
};

struct PlanEvaluation {
  std::size_t neighbors = kDefaultNeighborhood;  // G* and Lee's L window
  std::size_t block_length = 10;                 // iterations per pathway block
  double empirical_block_length = 10.0;          // usage time units per block
  std::size_t lag = 1;
  std::uint32_t min_edges = kMinPathwayEdges;
  std::size_t bootstrap = 1000;
  double ci_level = 0.95;
  std::size_t regions = 5;
};

struct ExperimentPlan {
  std::vector<std::string> words;
  std::vector<Mode> modes{std::begin(kAllModes), std::end(kAllModes)};
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  /// Q, r, theta, default stickiness and stopping rule for every run.
  SimulationConfig simulation;
  /// Per-word stickiness; overrides the default and skips tuning for that word.
  std::map<std::string, double> stickiness;
  PlanCalibration calibration;
  PlanEvaluation evaluation;

  /// Throws InputError (empty word list, no modes, zero trials, bad settings).
  void validate() const;
  /// Canonical JSON (sorted keys); parse_plan(to_json()) round-trips.
  std::string to_json() const;
  /// FNV-1a of the canonical JSON, as 16 hex digits.
  std::string digest() const;
};

ExperimentPlan parse_plan(const std::string& json_text);

/// Seed derivation. The adoption seed depends on (word, trial) only, so every
/// mode sees the same draws; the shuffle seed depends on the trial only, so
/// the shuffled-graph modes share one rewired graph per trial.
std::uint64_t adoption_seed(std::uint64_t plan_seed, const std::string& word, std::size_t trial);
std::uint64_t shuffle_seed(std::uint64_t plan_seed, std::size_t trial);

struct TrialRecord {
  std::string word;
  Mode mode = Mode::network_identity;
  std::size_t trial = 0;
  SimulationConfig config;  // seeds and stickiness filled in
  std::vector<AgentId> seeds;
  std::uint64_t total_uses = 0;
  Termination termination = Termination::converged;
  std::size_t shuffle_unresolved = 0;
  std::vector<std::uint32_t> adopter_counts;
  std::vector<std::vector<std::uint32_t>> county_uses;  // per iteration, dense
  // Filled by evaluation.
  std::optional<double> lee_l;
  std::optional<Similarity> similarity;
  bool map_degenerate = false;

  std::uint32_t iterations() const noexcept { return static_cast<std::uint32_t>(adopter_counts.size()); }
};

struct JobFailure {
  std::string word;  // empty for mode-level stages
  std::string mode;  // empty for plan-level stages
  std::optional<std::size_t> trial;
  std::string stage;
  std::string message;
};

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
  std::size_t n = 0;
};

struct WordModeSummary {
  std::string word;
  Mode mode = Mode::network_identity;
  std::size_t trials = 0;
  double mean_uses = 0.0;
  std::optional<Interval> lee_l;
  std::size_t broadly_similar = 0;  // trials with L >= 0.13
  std::size_t very_similar = 0;     // trials with L >= 0.4
};

struct ModeSummary {
  Mode mode = Mode::network_identity;
  std::size_t trials = 0;
  std::optional<Interval> lee_l;
  double broadly_similar_share = 0.0;
  double very_similar_share = 0.0;
  std::size_t pathways = 0;
  std::size_t shared_pathways = 0;
  std::optional<double> likelihood;
  std::optional<double> likelihood_urban_urban;
  std::optional<double> likelihood_rural_rural;
  std::optional<double> likelihood_urban_rural;
};

struct ExperimentResults {
  ExperimentPlan plan;
  std::string digest;
  std::map<std::string, double> stickiness;  // value used per word
  std::optional<GlobalCalibration> global_calibration;
  std::vector<StickinessCalibration> stickiness_calibration;
  std::vector<TrialRecord> trials;  // plan order: word, mode, trial
  std::vector<JobFailure> failures;
  std::optional<PathwayMatrix> empirical_pathways;
  std::map<Mode, PathwayMatrix> pathways;
  std::vector<WordModeSummary> word_summaries;
  std::vector<ModeSummary> mode_summaries;
  std::optional<OlsFit> regression;  // empirical tau on network-only and identity-only tau
  std::optional<PrincipalRegions> regions;  // of the empirical maps
  std::vector<CountyIndex> map_counties;  // populated counties, column order of the maps
};

struct ExperimentOptions {
  std::size_t threads = 1;
  /// When set, per-trial files and summary tables are written here.
  std::optional<std::filesystem::path> out_dir;
};

/// Calibrates (if asked), runs every (word, mode, trial) job, evaluates and
/// summarises. Failures are isolated per job and reported, never fatal.
ExperimentResults run_experiment(const ExperimentPlan& plan, const WorldBundle& world,
                                 const ExperimentOptions& options = {});

/// Recomputes maps, Lee's L, pathways, likelihoods, regression, regions and
/// summaries from the trial records already in `results`.
void evaluate_experiment(ExperimentResults& results, const WorldBundle& world, std::size_t threads = 1);

/// Writes plan.json, the per-(word, mode) trial files and the summary tables.
void write_trial_files(const ExperimentResults& results, const WorldBundle& world, const std::filesystem::path& dir);
void write_summary_files(const ExperimentResults& results, const WorldBundle& world, const std::filesystem::path& dir);

/// Reads plan.json and the trial files back from a results directory; the
/// evaluation fields are left empty. Missing, malformed or foreign trial
/// files become "load" failures.
ExperimentResults load_results(const std::filesystem::path& dir, const WorldBundle& world);

/// Mean with a percentile bootstrap interval over `values`.
Interval bootstrap_mean(const std::vector<double>& values, std::size_t resamples, double level, std::uint64_t seed);

/// AdoptionLog as JSON: config echo, termination, per-iteration adopter
/// counts overall and by county (sparse, keyed by FIPS).
std::string adoption_log_json(const AdoptionLog& log, const WorldBundle& world, const std::string& word);

/// Relative path of a trial file inside a results directory.
std::filesystem::path trial_file(const std::string& word, Mode mode, std::size_t trial);

}  // namespace lexdiff
