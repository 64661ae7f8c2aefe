#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexdiff {

using AgentId = std::uint32_t;
using CountyIndex = std::uint32_t;

/// Directed tie i -> j: i's usage exposes j. `mentions` counts how often j
/// mentioned i; `weight` is the normalized tie strength.
struct Edge {
  AgentId source = 0;
  AgentId target = 0;
  std::uint32_t mentions = 1;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable weighted directed graph over dense agent ids [0, n).
///
/// Edges are stored sorted by (target, source), so each node's in-edges form a
/// contiguous block. Out-edges are an index into that array, sorted by target.
class SocialGraph {
 public:
  SocialGraph() = default;

  /// Validates and indexes `edges`. Throws InputError on out-of-range ids,
  /// self-loops, duplicate directed edges or weights outside [0,1].
  static SocialGraph from_edges(std::size_t num_agents, std::vector<Edge> edges);

  std::size_t num_agents() const noexcept { return in_offsets_.empty() ? 0 : in_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Edge> in_edges(AgentId j) const noexcept {
    return std::span<const Edge>(edges_).subspan(in_offsets_[j], in_offsets_[j + 1] - in_offsets_[j]);
  }
  /// Position of j's first in-edge within edges().
  std::size_t in_offset(AgentId j) const noexcept { return in_offsets_[j]; }
  /// Indices into edges() of i's out-edges, ascending by target.
  std::span<const std::uint32_t> out_edge_indices(AgentId i) const noexcept {
    return std::span<const std::uint32_t>(out_index_).subspan(out_offsets_[i],
                                                               out_offsets_[i + 1] - out_offsets_[i]);
  }
  std::size_t in_degree(AgentId j) const noexcept { return in_offsets_[j + 1] - in_offsets_[j]; }
  std::size_t out_degree(AgentId i) const noexcept { return out_offsets_[i + 1] - out_offsets_[i]; }

  bool has_edge(AgentId source, AgentId target) const noexcept;

  /// True when every node with in-edges has a maximum incoming weight of 1.
  bool weights_normalized() const noexcept;

  friend bool operator==(const SocialGraph& a, const SocialGraph& b) { return a.edges_ == b.edges_ && a.num_agents() == b.num_agents(); }

 private:
  std::vector<Edge> edges_;
  std::vector<std::size_t> in_offsets_;
  std::vector<std::size_t> out_offsets_;
  std::vector<std::uint32_t> out_index_;
};

/// Tie strength from mention counts, smoothed:
///   w_ij = log(1 + n_ij) / max_{k in N(j)} log(1 + n_kj).
/// Throws InputError if any mention count is 0.
SocialGraph compute_edge_weights(const SocialGraph& raw);

struct ShuffleResult {
  SocialGraph graph;
  /// Stub pairs the rewiring could not place validly; those positions keep
  /// their original edges.
  std::size_t unresolved = 0;
};

/// Degree-preserving rewiring. Out-stubs stay with their source; in-stubs
/// carry the target together with its weight and mention count, so every
/// node's multiset of incoming weights survives. Deterministic in `seed`.
ShuffleResult shuffle_network(const SocialGraph& graph, std::uint64_t seed);

struct County {
  std::string fips;
  double lat = 0.0;
  double lon = 0.0;
  std::uint64_t urbanized_population = 0;
};

/// Agent -> county mapping plus per-county metadata.
class CountyAssignment {
 public:
  CountyAssignment() = default;
  /// Throws InputError if any agent refers to a county index out of range or
  /// county codes repeat.
  CountyAssignment(std::vector<County> counties, std::vector<CountyIndex> agent_county);

  std::size_t num_counties() const noexcept { return counties_.size(); }
  std::size_t num_agents() const noexcept { return agent_county_.size(); }
  const std::vector<County>& counties() const noexcept { return counties_; }
  const County& county(CountyIndex c) const { return counties_.at(c); }
  CountyIndex county_of(AgentId a) const { return agent_county_.at(a); }
  const std::vector<CountyIndex>& agent_counties() const noexcept { return agent_county_; }
  std::uint32_t agent_count(CountyIndex c) const { return agent_counts_.at(c); }
  const std::vector<std::uint32_t>& agent_counts() const noexcept { return agent_counts_; }
  std::optional<CountyIndex> index_of(std::string_view fips) const;
  /// Agents of county c in ascending id order.
  std::vector<std::vector<AgentId>> members() const;

 private:
  std::vector<County> counties_;
  std::vector<CountyIndex> agent_county_;
  std::vector<std::uint32_t> agent_counts_;
  std::unordered_map<std::string, CountyIndex> by_fips_;
};

/// Dense square county-pair affinity (row-major).
struct AffinityMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

/// Synthetic network from county-pair connectedness: pair (i,j) receives
/// SC_ij * N_i * N_j * total / sum_kl SC_kl N_k N_l edges (largest-remainder
/// rounding), endpoints drawn uniformly inside each county without self-loops
/// or duplicates. All weights and mention counts are 1.
SocialGraph generate_sci_network(const AffinityMatrix& sci, const CountyAssignment& counties,
                                 std::size_t total_edges, std::uint64_t seed);

/// Number of edges running from county a to county b, keyed a * C + b.
std::unordered_map<std::uint64_t, std::uint32_t> county_edge_counts(const SocialGraph& graph,
                                                                    const CountyAssignment& counties);

}  // namespace lexdiff
