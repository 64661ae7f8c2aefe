#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexdiff/identity.hpp"
#include "lexdiff/network.hpp"

namespace lexdiff {

/// The four counterfactual model variants.
enum class Mode : std::uint8_t {
  network_identity,  // full model
  network_only,      // delta == 1 everywhere
  identity_only,     // shuffled graph
  null_model,        // shuffled graph, delta == 1
};

inline constexpr Mode kAllModes[] = {Mode::network_identity, Mode::network_only, Mode::identity_only,
                                     Mode::null_model};

std::string_view to_string(Mode mode) noexcept;
/// Accepts the canonical names ("network_identity", ..., "null"). Throws InputError.
Mode parse_mode(std::string_view name);
constexpr bool uses_identity(Mode m) noexcept { return m == Mode::network_identity || m == Mode::identity_only; }
constexpr bool uses_shuffled_graph(Mode m) noexcept { return m == Mode::identity_only || m == Mode::null_model; }

struct SimulationConfig {
  Mode mode = Mode::network_identity;
  double q = 0.75;           // enregisterment threshold
  double r = 0.4;            // attention retained per idle iteration
  std::uint32_t theta = 100; // exposures until novelty is gone
  double stickiness = 0.5;   // S_w
  std::uint64_t seed = 0;          // adoption draws
  std::uint64_t shuffle_seed = 0;  // rewiring for the shuffled-graph modes
  std::uint32_t min_iterations = 100;
  std::uint32_t stop_window = 10;
  double stop_growth = 0.01;
  std::uint32_t max_iterations = 2000;

  /// Throws InputError on out-of-range parameters.
  void validate() const;
};

/// Per-word identity factors, precomputed once per run.
struct WordSignal {
  std::optional<WordIdentity> identity;  // absent when the mode ignores identity
  std::vector<double> relevance;         // delta_jw per agent
  std::vector<double> relatability;      // delta_ij per edge, in graph edge order
  std::vector<double> normalizer;        // sum_{k in N(j)} w_kj * delta_kj per agent
};

struct SimulationState {
  std::uint32_t iteration = 0;
  std::vector<double> p;                 // adoption likelihood for the next draw
  std::vector<std::uint32_t> exposures;  // n_jwt
  std::vector<std::uint8_t> ever_exposed;
  std::vector<AgentId> exposed;          // ever-exposed agents, first-exposure order
  std::vector<AgentId> adopters;         // adopt(t), ascending
  std::vector<std::uint32_t> uses;       // per-agent uses so far
  std::uint64_t total_uses = 0;

  // Scratch stamps keyed by iteration; not part of the observable state.
  std::vector<std::uint32_t> adopter_stamp;
  std::vector<std::uint32_t> touched_stamp;
  std::vector<AgentId> touched;
  std::vector<double> novelty_table;  // novelty(n, theta) for n = 0..theta
};

struct SeededSimulation {
  std::vector<AgentId> seeds;  // deduplicated, first-occurrence order
  SimulationState state;
  WordSignal signal;
};

/// Deduplicates the seed list preserving first occurrence. Throws InputError on
/// unknown ids or an empty list.
std::vector<AgentId> unique_seeds(std::span<const AgentId> word_seed, std::size_t num_agents);

/// adopt(0) = seeds; enregisters the word from the seeds when the mode uses
/// identity. `graph` is the graph the run will use (already shuffled for the
/// shuffled-graph modes). `identities` may be null only for modes without
/// identity.
SeededSimulation seed_simulation(std::span<const AgentId> word_seed, const SimulationConfig& config,
                                 const SocialGraph& graph, const IdentityTable* identities);

/// Novelty 0.5 * (cos(pi * min(n, theta) / theta) + 1).
double novelty(std::uint32_t exposures, std::uint32_t theta);

/// One synchronous iteration: updates p from adopt(t), then draws adopt(t+1)
/// with the counter-based stream keyed by (config.seed, agent, t + 1).
void step(SimulationState& state, const SocialGraph& graph, const WordSignal& signal, const SimulationConfig& config);

enum class Termination : std::uint8_t { converged, truncated };
std::string_view to_string(Termination t) noexcept;

struct AdoptionLog {
  SimulationConfig config;
  std::vector<AgentId> seeds;
  std::optional<WordIdentity> word_identity;
  /// adopt(t) for t = 0..T; empty when the run was asked not to keep them.
  std::vector<std::vector<AgentId>> adopters;
  /// |adopt(t)| for t = 0..T.
  std::vector<std::uint32_t> adopter_counts;
  /// Uses per county per iteration (dense); empty without a county assignment.
  std::vector<std::vector<std::uint32_t>> county_uses;
  std::uint64_t total_uses = 0;
  Termination termination = Termination::converged;
  std::size_t shuffle_unresolved = 0;

  std::uint32_t iterations() const noexcept { return static_cast<std::uint32_t>(adopter_counts.size()); }
};

struct RunOptions {
  const CountyAssignment* counties = nullptr;
  bool keep_adopters = true;
};

/// Full run. For the shuffled-graph modes the graph is rewired with
/// config.shuffle_seed first. Stops once cumulative uses grow by less than
/// stop_growth over stop_window iterations and at least min_iterations have
/// passed, or at max_iterations (marked truncated).
AdoptionLog run(const SimulationConfig& config, const SocialGraph& graph, const IdentityTable* identities,
                std::span<const AgentId> word_seed, const RunOptions& options = {});

/// Same as run() but on a graph the caller has already prepared for the mode
/// (no shuffling happens here).
AdoptionLog run_on_graph(const SimulationConfig& config, const SocialGraph& effective_graph,
                         const IdentityTable* identities, std::span<const AgentId> word_seed,
                         const RunOptions& options = {});

/// Runs from a prepared seed state. The signal depends only on the mode, Q and
/// the seeds, so one preparation serves runs differing in r, theta, S or seed.
AdoptionLog run_prepared(const SimulationConfig& config, const SocialGraph& effective_graph, SeededSimulation prepared,
                         const RunOptions& options = {});

struct Use {
  AgentId agent = 0;
  double time = 0.0;
};

/// Draws k distinct initial adopters from the unique agents behind the first
/// `pool_size` uses (topped up with the 2nd..10th unique adopters overall when
/// that pool has fewer than k). `usage` must be time-ordered.
std::vector<AgentId> sample_initial_adopters(std::span<const Use> usage, std::size_t k, std::size_t pool_size,
                                             std::uint64_t seed);

}  // namespace lexdiff
