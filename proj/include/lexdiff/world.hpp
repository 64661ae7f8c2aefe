#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lexdiff/engine.hpp"
#include "lexdiff/identity.hpp"
#include "lexdiff/network.hpp"

namespace lexdiff {

struct WordSeed {
  std::string word;
  std::vector<AgentId> seeds;  // ordered, dense agent ids
};

/// Everything a diffusion experiment needs, with agents renumbered densely in
/// agents-file order.
struct WorldBundle {
  std::vector<std::string> agent_ids;  // external id of each dense agent
  CountyAssignment counties;
  SocialGraph graph;                   // weights computed from mention counts
  IdentityTable identities;
  std::vector<WordSeed> words;
  std::map<std::string, std::vector<Use>> usage;  // optional, time-ordered per word

  const CategorySchema& schema() const noexcept { return identities.schema(); }
  const WordSeed* find_word(const std::string& word) const;
};

/// Bundle file names inside a world directory.
namespace world_files {
inline constexpr const char* kCounties = "counties.tsv";
inline constexpr const char* kAgents = "agents.tsv";
inline constexpr const char* kGraph = "graph.tsv";
inline constexpr const char* kSchema = "schema.json";
inline constexpr const char* kIdentities = "identities.tsv";
inline constexpr const char* kSeeds = "seeds.tsv";
inline constexpr const char* kUsage = "usage.tsv";
}  // namespace world_files

/// Loads and cross-validates a world directory. Every problem found (with
/// file and line) is collected and thrown together as a ValidationError.
WorldBundle load_world(const std::filesystem::path& dir);

/// Writes the bundle so that load_world reproduces it exactly.
void write_world(const WorldBundle& world, const std::filesystem::path& dir);

CategorySchema parse_schema_json(const std::string& text);
std::string schema_to_json(const CategorySchema& schema);

struct WorldParams {
  std::size_t agents = 5000;
  std::size_t counties = 100;
  std::size_t words = 20;
  std::size_t seeds_per_word = 10;
  double homophily = 0.8;     // 0: ties ignore place and identity; 1: strongest preference
  double mean_degree = 12.0;  // mean out-degree
  double county_size_exponent = 1.1;  // Pareto tail of county sizes
  double tie_length_km = 400.0;       // distance scale of tie decay at homophily 1
  double identity_selectivity = 12.0; // identity-dissimilarity penalty at homophily 1
  double identity_noise = 0.12;       // agent spread around the county mean
  std::uint64_t seed = 1;
  /// Empty means the built-in three-category schema.
  std::vector<IdentityCategory> schema;
};

/// Built-in schema: politics (2), race/ethnicity (4), language (1).
CategorySchema default_schema();

/// Synthetic world: power-law county sizes on a lat/lon box (the largest
/// ~13% counties scaled above the urban threshold), spatially autocorrelated
/// identities, ties preferring nearby and similar agents in proportion to
/// homophily, heavy-tailed mention counts, and word seeds clustered around a
/// random origin. Deterministic in params.seed. Throws InputError when the
/// requested degree is infeasible.
WorldBundle generate_world(const WorldParams& params);

/// Use records (agent, iteration) from a run's adopter sets.
std::vector<Use> usage_from_log(const AdoptionLog& log);

/// Uses per county per block of `block_length` time units, as counts.
std::vector<std::vector<std::uint32_t>> county_uses_from_usage(const std::vector<Use>& usage,
                                                                const CountyAssignment& counties,
                                                                double block_length);

}  // namespace lexdiff
