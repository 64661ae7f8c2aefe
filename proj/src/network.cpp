#include "lexdiff/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "lexdiff/error.hpp"
#include "lexdiff/rng.hpp"

namespace lexdiff {
namespace {

constexpr std::uint64_t pair_key(AgentId source, AgentId target) noexcept {
  return (static_cast<std::uint64_t>(source) << 32) | target;
}

}  // namespace

SocialGraph SocialGraph::from_edges(std::size_t num_agents, std::vector<Edge> edges) {
  if (num_agents > std::numeric_limits<AgentId>::max()) throw InputError("too many agents");
  for (const Edge& e : edges) {
    if (e.source >= num_agents || e.target >= num_agents) {
      throw InputError("edge " + std::to_string(e.source) + "->" + std::to_string(e.target) +
                       " references an agent outside [0, " + std::to_string(num_agents) + ")");
    }
    if (e.source == e.target) throw InputError("self-loop on agent " + std::to_string(e.source));
    if (!(e.weight >= 0.0 && e.weight <= 1.0)) {
      throw InputError("edge weight outside [0,1] on " + std::to_string(e.source) + "->" +
                       std::to_string(e.target));
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.target != b.target ? a.target < b.target : a.source < b.source;
  });
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k].source == edges[k - 1].source && edges[k].target == edges[k - 1].target) {
      throw InputError("duplicate edge " + std::to_string(edges[k].source) + "->" +
                       std::to_string(edges[k].target));
    }
  }

  SocialGraph g;
  g.edges_ = std::move(edges);
  g.in_offsets_.assign(num_agents + 1, 0);
  g.out_offsets_.assign(num_agents + 1, 0);
  for (const Edge& e : g.edges_) {
    ++g.in_offsets_[e.target + 1];
    ++g.out_offsets_[e.source + 1];
  }
  std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());
  std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
  g.out_index_.resize(g.edges_.size());
  std::vector<std::size_t> cursor(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
  for (std::size_t k = 0; k < g.edges_.size(); ++k) {
    g.out_index_[cursor[g.edges_[k].source]++] = static_cast<std::uint32_t>(k);
  }
  return g;
}

bool SocialGraph::has_edge(AgentId source, AgentId target) const noexcept {
  if (target >= num_agents()) return false;
  auto in = in_edges(target);
  auto it = std::lower_bound(in.begin(), in.end(), source,
                             [](const Edge& e, AgentId s) { return e.source < s; });
  return it != in.end() && it->source == source;
}

bool SocialGraph::weights_normalized() const noexcept {
  for (AgentId j = 0; j < num_agents(); ++j) {
    auto in = in_edges(j);
    if (in.empty()) continue;
    double best = 0.0;
    for (const Edge& e : in) best = std::max(best, e.weight);
    if (best != 1.0) return false;
  }
  return true;
}

SocialGraph compute_edge_weights(const SocialGraph& raw) {
  std::vector<Edge> edges(raw.edges().begin(), raw.edges().end());
  for (AgentId j = 0; j < raw.num_agents(); ++j) {
    const std::size_t begin = raw.in_offset(j);
    const std::size_t end = begin + raw.in_degree(j);
    double max_log = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      if (edges[k].mentions == 0) {
        throw InputError("edge " + std::to_string(edges[k].source) + "->" + std::to_string(j) +
                         " has mention count 0");
      }
      max_log = std::max(max_log, std::log1p(static_cast<double>(edges[k].mentions)));
    }
    for (std::size_t k = begin; k < end; ++k) {
      edges[k].weight = std::log1p(static_cast<double>(edges[k].mentions)) / max_log;
    }
  }
  return SocialGraph::from_edges(raw.num_agents(), std::move(edges));
}

ShuffleResult shuffle_network(const SocialGraph& graph, std::uint64_t seed) {
  const auto original = graph.edges();
  const std::size_t m = original.size();
  CounterRng rng(seed, 0x5348554646ULL);

  // Position k keeps out-stub original[k].source and receives in-stub assign[k].
  std::vector<std::uint32_t> assign(m);
  std::iota(assign.begin(), assign.end(), 0U);
  rng.shuffle(assign);

  std::unordered_map<std::uint64_t, std::uint32_t> multiplicity;
  multiplicity.reserve(m * 2);
  auto key_at = [&](std::size_t k) { return pair_key(original[k].source, original[assign[k]].target); };
  for (std::size_t k = 0; k < m; ++k) ++multiplicity[key_at(k)];
  auto valid = [&](std::size_t k) {
    return original[k].source != original[assign[k]].target && multiplicity[key_at(k)] == 1;
  };
  auto count_of = [&](std::uint64_t key) {
    auto it = multiplicity.find(key);
    return it == multiplicity.end() ? 0U : it->second;
  };
  auto move_edge = [&](std::uint64_t from, std::uint64_t to) {
    if (--multiplicity[from] == 0) multiplicity.erase(from);
    ++multiplicity[to];
  };

  // Repair: swap the in-stubs of a bad position and a random partner whenever
  // both resulting edges are fresh and loop-free.
  std::size_t budget = 10 * m;
  std::vector<std::size_t> bad;
  while (budget > 0) {
    bad.clear();
    for (std::size_t k = 0; k < m; ++k) {
      if (!valid(k)) bad.push_back(k);
    }
    if (bad.empty()) break;
    for (std::size_t a : bad) {
      if (budget == 0) break;
      if (valid(a)) continue;
      --budget;
      const std::size_t b = static_cast<std::size_t>(rng.below(m));
      if (b == a) continue;
      const AgentId sa = original[a].source;
      const AgentId sb = original[b].source;
      const AgentId ta = original[assign[a]].target;
      const AgentId tb = original[assign[b]].target;
      if (sa == tb || sb == ta || sa == sb) continue;
      const std::uint64_t new_a = pair_key(sa, tb);
      const std::uint64_t new_b = pair_key(sb, ta);
      if (count_of(new_a) != 0 || count_of(new_b) != 0) continue;
      move_edge(pair_key(sa, ta), new_a);
      move_edge(pair_key(sb, tb), new_b);
      std::swap(assign[a], assign[b]);
    }
  }

  // Fallback: put unresolved positions back on their original in-stub. Each
  // revert adds a fixed point, and the all-original wiring is valid, so this
  // terminates with a valid graph.
  std::size_t unresolved = 0;
  std::vector<std::uint32_t> where(m);
  for (std::size_t k = 0; k < m; ++k) where[assign[k]] = static_cast<std::uint32_t>(k);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (assign[k] == k || valid(k)) continue;
      const std::size_t holder = where[k];
      const std::uint64_t old_k = key_at(k);
      const std::uint64_t old_holder = key_at(holder);
      std::swap(assign[k], assign[holder]);
      where[assign[k]] = static_cast<std::uint32_t>(k);
      where[assign[holder]] = static_cast<std::uint32_t>(holder);
      move_edge(old_k, key_at(k));
      move_edge(old_holder, key_at(holder));
      ++unresolved;
      changed = true;
    }
  }

  std::vector<Edge> rewired(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Edge& in_stub = original[assign[k]];
    rewired[k] = Edge{original[k].source, in_stub.target, in_stub.mentions, in_stub.weight};
  }
  return ShuffleResult{SocialGraph::from_edges(graph.num_agents(), std::move(rewired)), unresolved};
}

CountyAssignment::CountyAssignment(std::vector<County> counties, std::vector<CountyIndex> agent_county)
    : counties_(std::move(counties)), agent_county_(std::move(agent_county)) {
  agent_counts_.assign(counties_.size(), 0);
  for (std::size_t c = 0; c < counties_.size(); ++c) {
    if (!by_fips_.emplace(counties_[c].fips, static_cast<CountyIndex>(c)).second) {
      throw InputError("duplicate county code " + counties_[c].fips);
    }
  }
  for (std::size_t a = 0; a < agent_county_.size(); ++a) {
    if (agent_county_[a] >= counties_.size()) {
      throw InputError("agent " + std::to_string(a) + " assigned to unknown county index");
    }
    ++agent_counts_[agent_county_[a]];
  }
}

std::optional<CountyIndex> CountyAssignment::index_of(std::string_view fips) const {
  auto it = by_fips_.find(std::string(fips));
  if (it == by_fips_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<AgentId>> CountyAssignment::members() const {
  std::vector<std::vector<AgentId>> out(counties_.size());
  for (std::size_t c = 0; c < counties_.size(); ++c) out[c].reserve(agent_counts_[c]);
  for (std::size_t a = 0; a < agent_county_.size(); ++a) out[agent_county_[a]].push_back(static_cast<AgentId>(a));
  return out;
}

SocialGraph generate_sci_network(const AffinityMatrix& sci, const CountyAssignment& counties,
                                 std::size_t total_edges, std::uint64_t seed) {
  const std::size_t c = counties.num_counties();
  if (c == 0) throw InputError("no counties supplied");
  if (sci.size != c || sci.values.size() != c * c) {
    throw InputError("affinity matrix must be " + std::to_string(c) + "x" + std::to_string(c));
  }
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double v = sci.at(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("affinity must be finite and nonnegative");
      if (v != sci.at(j, i)) throw InputError("affinity matrix must be symmetric");
    }
  }

  const auto& n = counties.agent_counts();
  std::vector<double> mass(c * c, 0.0);
  double total_mass = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double capacity_pairs = (i == j) ? static_cast<double>(n[i]) * (n[i] > 0 ? n[i] - 1.0 : 0.0)
                                             : static_cast<double>(n[i]) * n[j];
      if (capacity_pairs <= 0.0) continue;
      mass[i * c + j] = sci.at(i, j) * n[i] * n[j];
      total_mass += mass[i * c + j];
    }
  }
  if (!(total_mass > 0.0)) throw InputError("total county affinity is zero");

  // Largest-remainder apportionment of total_edges over ordered county pairs.
  std::vector<std::uint64_t> quota(c * c, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t p = 0; p < c * c; ++p) {
    if (mass[p] == 0.0) continue;
    const double exact = mass[p] * static_cast<double>(total_edges) / total_mass;
    quota[p] = static_cast<std::uint64_t>(std::floor(exact));
    assigned += quota[p];
    remainders.emplace_back(exact - std::floor(exact), p);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total_edges && r < remainders.size(); ++r, ++assigned) {
    ++quota[remainders[r].second];
  }

  const auto members = counties.members();
  std::vector<Edge> edges;
  edges.reserve(total_edges);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const std::uint64_t want = quota[i * c + j];
      if (want == 0) continue;
      const auto& from = members[i];
      const auto& to = members[j];
      const std::uint64_t capacity = (i == j) ? static_cast<std::uint64_t>(from.size()) * (from.size() - 1)
                                              : static_cast<std::uint64_t>(from.size()) * to.size();
      if (want > capacity) {
        throw InputError("county pair " + counties.county(static_cast<CountyIndex>(i)).fips + "->" +
                         counties.county(static_cast<CountyIndex>(j)).fips + " cannot hold " +
                         std::to_string(want) + " distinct edges");
      }
      CounterRng rng(derive_seed(seed, {i, j}));
      if (2 * want > capacity) {
        std::vector<std::uint64_t> candidates;
        candidates.reserve(capacity);
        for (AgentId s : from) {
          for (AgentId t : to) {
            if (s != t) candidates.push_back(pair_key(s, t));
          }
        }
        for (std::uint64_t k = 0; k < want; ++k) {
          const std::uint64_t pick = k + rng.below(candidates.size() - k);
          std::swap(candidates[k], candidates[pick]);
          edges.push_back(Edge{static_cast<AgentId>(candidates[k] >> 32),
                               static_cast<AgentId>(candidates[k] & 0xFFFFFFFFULL), 1, 1.0});
        }
      } else {
        std::unordered_set<std::uint64_t> used;
        while (used.size() < want) {
          const AgentId s = from[rng.below(from.size())];
          const AgentId t = to[rng.below(to.size())];
          if (s == t || !used.insert(pair_key(s, t)).second) continue;
          edges.push_back(Edge{s, t, 1, 1.0});
        }
      }
    }
  }
  return SocialGraph::from_edges(counties.num_agents(), std::move(edges));
}

std::unordered_map<std::uint64_t, std::uint32_t> county_edge_counts(const SocialGraph& graph,
                                                                    const CountyAssignment& counties) {
  std::unordered_map<std::uint64_t, std::uint32_t> counts;
  const std::uint64_t c = counties.num_counties();
  for (const Edge& e : graph.edges()) {
    ++counts[static_cast<std::uint64_t>(counties.county_of(e.source)) * c + counties.county_of(e.target)];
  }
  return counts;
}

}  // namespace lexdiff
