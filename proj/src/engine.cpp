#include "lexdiff/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lexdiff/error.hpp"
#include "lexdiff/rng.hpp"

namespace lexdiff {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::network_identity: return "network_identity";
    case Mode::network_only: return "network_only";
    case Mode::identity_only: return "identity_only";
    case Mode::null_model: return "null";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown mode '" + std::string(name) +
                   "' (expected network_identity, network_only, identity_only or null)");
}

std::string_view to_string(Termination t) noexcept {
  return t == Termination::converged ? "converged" : "truncated";
}

void SimulationConfig::validate() const {
  if (!(q > 0.0 && q < 1.0)) throw InputError("Q must lie in (0,1)");
  if (!(r >= 0.0 && r <= 1.0)) throw InputError("r must lie in [0,1]");
  if (theta < 1) throw InputError("theta must be at least 1");
  if (!(stickiness >= 0.0 && stickiness <= 1.0)) throw InputError("stickiness must lie in [0,1]");
  if (stop_window < 1) throw InputError("stop_window must be at least 1");
  if (!(stop_growth >= 0.0)) throw InputError("stop_growth must be nonnegative");
  if (max_iterations < min_iterations) throw InputError("max_iterations must be >= min_iterations");
}

double novelty(std::uint32_t exposures, std::uint32_t theta) {
  const double clipped = static_cast<double>(std::min(exposures, theta));
  return 0.5 * (std::cos(clipped / static_cast<double>(theta) * std::numbers::pi) + 1.0);
}

std::vector<AgentId> unique_seeds(std::span<const AgentId> word_seed, std::size_t num_agents) {
  std::vector<AgentId> out;
  out.reserve(word_seed.size());
  for (AgentId a : word_seed) {
    if (a >= num_agents) throw InputError("seed agent " + std::to_string(a) + " is not in the graph");
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  if (out.empty()) throw InputError("a word needs at least one seed agent");
  return out;
}

SeededSimulation seed_simulation(std::span<const AgentId> word_seed, const SimulationConfig& config,
                                 const SocialGraph& graph, const IdentityTable* identities) {
  config.validate();
  const std::size_t n = graph.num_agents();
  const auto seeds = unique_seeds(word_seed, n);

  SeededSimulation sim;
  WordSignal& signal = sim.signal;
  if (uses_identity(config.mode)) {
    if (identities == nullptr) throw InputError("mode " + std::string(to_string(config.mode)) + " needs identities");
    if (identities->num_agents() != n) throw InputError("identity table and graph disagree on agent count");
    signal.identity = enregister_word(*identities, seeds, config.q);
    signal.relevance = word_similarities(*identities, *signal.identity);
    signal.relatability = neighbor_similarities(*identities, graph, *signal.identity);
  } else {
    signal.relevance.assign(n, 1.0);
    signal.relatability.assign(graph.num_edges(), 1.0);
  }
  signal.normalizer.assign(n, 0.0);
  const auto edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    signal.normalizer[edges[e].target] += edges[e].weight * signal.relatability[e];
  }

  sim.seeds = seeds;
  SimulationState& state = sim.state;
  state.p.assign(n, 0.0);
  state.exposures.assign(n, 0);
  state.ever_exposed.assign(n, 0);
  state.uses.assign(n, 0);
  state.adopter_stamp.assign(n, 0);
  state.touched_stamp.assign(n, 0);
  state.adopters = seeds;
  std::sort(state.adopters.begin(), state.adopters.end());
  for (AgentId a : state.adopters) ++state.uses[a];
  state.total_uses = state.adopters.size();
  return sim;
}

void step(SimulationState& state, const SocialGraph& graph, const WordSignal& signal, const SimulationConfig& config) {
  const std::uint32_t next = state.iteration + 1;
  const auto edges = graph.edges();
  if (state.novelty_table.size() != std::size_t{config.theta} + 1) {
    state.novelty_table.resize(std::size_t{config.theta} + 1);
    for (std::uint32_t n = 0; n <= config.theta; ++n) state.novelty_table[n] = novelty(n, config.theta);
  }

  for (AgentId i : state.adopters) state.adopter_stamp[i] = next;
  state.touched.clear();
  for (AgentId i : state.adopters) {
    for (std::uint32_t e : graph.out_edge_indices(i)) {
      const AgentId j = edges[e].target;
      if (state.touched_stamp[j] != next) {
        state.touched_stamp[j] = next;
        state.touched.push_back(j);
      }
    }
  }
  // Ascending order; a stamp scan beats sorting once most agents are touched.
  const std::size_t n = state.touched_stamp.size();
  if (state.touched.size() * 16 > n) {
    state.touched.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (state.touched_stamp[j] == next) state.touched.push_back(static_cast<AgentId>(j));
    }
  } else {
    std::sort(state.touched.begin(), state.touched.end());
  }

  // Exposed this iteration: novelty uses the pre-increment exposure count.
  for (AgentId j : state.touched) {
    const std::size_t base = graph.in_offset(j);
    const auto in = graph.in_edges(j);
    double weighted = 0.0;
    std::uint32_t hits = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (state.adopter_stamp[in[k].source] != next) continue;
      weighted += in[k].weight * signal.relatability[base + k];
      ++hits;
    }
    const double denom = signal.normalizer[j];
    const double ratio = denom > 0.0 ? std::min(weighted / denom, 1.0) : 0.0;
    const double eta = state.novelty_table[std::min(state.exposures[j], config.theta)];
    const double p = signal.relevance[j] * config.stickiness * eta * ratio;
    if (std::isnan(p)) throw InternalError("NaN adoption probability for agent " + std::to_string(j));
    state.p[j] = p;
    state.exposures[j] += hits;
    if (!state.ever_exposed[j]) {
      state.ever_exposed[j] = 1;
      state.exposed.push_back(j);
    }
  }
  // Exposed before, idle now: attention decays.
  state.adopters.clear();
  for (AgentId j : state.exposed) {
    if (state.touched_stamp[j] != next) state.p[j] *= config.r;
    const double p = state.p[j];
    if (p > 0.0 && keyed_uniform(config.seed, j, next) < p) state.adopters.push_back(j);
  }
  if (state.adopters.size() * 16 > n) {
    // Stamps for the next iteration's adopter set double as a sort key.
    for (AgentId a : state.adopters) state.adopter_stamp[a] = next + 1;
    state.adopters.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (state.adopter_stamp[j] == next + 1) state.adopters.push_back(static_cast<AgentId>(j));
    }
  } else {
    std::sort(state.adopters.begin(), state.adopters.end());
  }
  for (AgentId a : state.adopters) ++state.uses[a];
  state.total_uses += state.adopters.size();
  state.iteration = next;
}

namespace {

void record(AdoptionLog& log, const SimulationState& state, const RunOptions& options) {
  log.adopter_counts.push_back(static_cast<std::uint32_t>(state.adopters.size()));
  if (options.keep_adopters) log.adopters.push_back(state.adopters);
  if (options.counties != nullptr) {
    std::vector<std::uint32_t> per_county(options.counties->num_counties(), 0);
    for (AgentId a : state.adopters) ++per_county[options.counties->county_of(a)];
    log.county_uses.push_back(std::move(per_county));
  }
}

}  // namespace

AdoptionLog run_on_graph(const SimulationConfig& config, const SocialGraph& effective_graph,
                         const IdentityTable* identities, std::span<const AgentId> word_seed,
                         const RunOptions& options) {
  if (options.counties != nullptr && options.counties->num_agents() != effective_graph.num_agents()) {
    throw InputError("county assignment and graph disagree on agent count");
  }
  return run_prepared(config, effective_graph, seed_simulation(word_seed, config, effective_graph, identities), options);
}

AdoptionLog run_prepared(const SimulationConfig& config, const SocialGraph& effective_graph, SeededSimulation sim,
                         const RunOptions& options) {
  config.validate();
  if (sim.state.p.size() != effective_graph.num_agents() ||
      sim.signal.relatability.size() != effective_graph.num_edges()) {
    throw InputError("prepared simulation does not match the graph");
  }
  if (options.counties != nullptr && options.counties->num_agents() != effective_graph.num_agents()) {
    throw InputError("county assignment and graph disagree on agent count");
  }
  AdoptionLog log;
  log.config = config;
  log.seeds = sim.seeds;
  log.word_identity = sim.signal.identity;
  record(log, sim.state, options);

  std::vector<std::uint64_t> cumulative{sim.state.total_uses};
  log.termination = Termination::truncated;
  while (sim.state.iteration < config.max_iterations) {
    step(sim.state, effective_graph, sim.signal, config);
    record(log, sim.state, options);
    cumulative.push_back(sim.state.total_uses);
    const std::uint32_t t = sim.state.iteration;
    if (t >= config.min_iterations && t >= config.stop_window) {
      const double before = static_cast<double>(cumulative[t - config.stop_window]);
      const double growth = (static_cast<double>(cumulative[t]) - before) / before;
      if (growth < config.stop_growth) {
        log.termination = Termination::converged;
        break;
      }
    }
  }
  log.total_uses = sim.state.total_uses;
  return log;
}

AdoptionLog run(const SimulationConfig& config, const SocialGraph& graph, const IdentityTable* identities,
                std::span<const AgentId> word_seed, const RunOptions& options) {
  if (!uses_shuffled_graph(config.mode)) return run_on_graph(config, graph, identities, word_seed, options);
  auto shuffled = shuffle_network(graph, config.shuffle_seed);
  auto log = run_on_graph(config, shuffled.graph, identities, word_seed, options);
  log.shuffle_unresolved = shuffled.unresolved;
  return log;
}

std::vector<AgentId> sample_initial_adopters(std::span<const Use> usage, std::size_t k, std::size_t pool_size,
                                             std::uint64_t seed) {
  if (usage.empty()) throw InputError("usage log is empty");
  if (k == 0) throw InputError("sample size must be positive");
  for (std::size_t u = 1; u < usage.size(); ++u) {
    if (usage[u].time < usage[u - 1].time) throw InputError("usage log must be time-ordered");
  }
  // Unique agents in order of first use.
  std::vector<AgentId> order;
  std::vector<std::size_t> first_use;
  for (std::size_t u = 0; u < usage.size(); ++u) {
    if (std::find(order.begin(), order.end(), usage[u].agent) == order.end()) {
      order.push_back(usage[u].agent);
      first_use.push_back(u);
    }
  }
  if (order.size() < k) {
    throw InputError("only " + std::to_string(order.size()) + " unique adopters; need " + std::to_string(k));
  }
  std::vector<AgentId> pool;
  for (std::size_t r = 0; r < order.size() && first_use[r] < pool_size; ++r) pool.push_back(order[r]);
  if (pool.size() < k) {
    // Top up with the 2nd..10th (or 2nd..k-th for larger k) unique adopters.
    const std::size_t last = std::max<std::size_t>(10, k);
    for (std::size_t r = 1; r < order.size() && r < last; ++r) {
      if (std::find(pool.begin(), pool.end(), order[r]) == pool.end()) pool.push_back(order[r]);
    }
  }
  if (pool.size() < k) throw InputError("initial-adopter pool smaller than the sample size");
  CounterRng rng(seed, 0x494E4954ULL);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pick = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[pick]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace lexdiff
