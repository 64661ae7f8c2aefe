#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexdiff/network.hpp"

namespace lexdiff {

/// Kendall's tau-b (tie-corrected), O(n log n). Returns 0 when either side
/// is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Zero-inflated Kendall's tau: p11^2 * tau11 + 2 (p00 p11 - p01 p10), with
/// tau11 the tau-b over observations where both series are positive (0 when
/// fewer than two).
double zero_inflated_tau(std::span<const double> u, std::span<const double> v);

/// County-normalized adoption per time block, stored as independent segments
/// (one per word and trial). Each segment is blocks x counties, row-major.
struct SpatialTimeSeries {
  std::size_t num_counties = 0;
  std::vector<std::vector<double>> segments;

  std::size_t blocks(std::size_t segment) const { return segments.at(segment).size() / num_counties; }
  /// Throws InputError on ragged segments or negative values.
  void validate() const;
};

/// Sums per-iteration county uses into blocks of `block_length` iterations
/// and divides by county agent counts (0 for empty counties). A trailing
/// partial block is dropped unless it is the only one.
std::vector<double> block_series(const std::vector<std::vector<std::uint32_t>>& county_uses_per_iteration,
                                 std::span<const std::uint32_t> county_agents, std::size_t block_length);

enum class CountyType : std::uint8_t { urban, rural };
enum class PairType : std::uint8_t { urban_urban, urban_rural, rural_rural };

inline constexpr std::uint64_t kUrbanThreshold = 100000;

CountyType classify_county(std::uint64_t urbanized_population) noexcept;
PairType pair_type(CountyType a, CountyType b) noexcept;
std::string_view to_string(CountyType t) noexcept;
std::string_view to_string(PairType t) noexcept;

struct Pathway {
  CountyIndex from = 0;
  CountyIndex to = 0;
  double tau = 0.0;
  std::uint32_t edge_count = 0;
  PairType type = PairType::urban_rural;
};

/// Directed county pairs sorted by (from, to).
struct PathwayMatrix {
  std::vector<Pathway> pathways;

  const Pathway* find(CountyIndex from, CountyIndex to) const;
};

inline constexpr std::uint32_t kMinPathwayEdges = 10;

/// For every ordered pair (i, j), i != j, with at least `min_edges` social
/// edges from i to j: zero-inflated tau between i's series at block t and j's
/// at block t + lag, concatenated over segments. `edge_counts` is keyed
/// i * C + j (see county_edge_counts).
PathwayMatrix build_pathways(const SpatialTimeSeries& series,
                             const std::unordered_map<std::uint64_t, std::uint32_t>& edge_counts,
                             std::span<const CountyType> county_types, std::size_t lag = 1,
                             std::uint32_t min_edges = kMinPathwayEdges);

inline constexpr double kPathwayFloor = 1e-6;

/// exp(sum q_E log q_M) over the pairs present in both matrices, where q is
/// tau clamped below at 1e-6 and normalized to sum 1. Throws InputError when
/// the matrices share no pair.
double pathway_likelihood(const PathwayMatrix& empirical, const PathwayMatrix& model);

/// pathway_likelihood restricted to one pair type; nullopt when no shared
/// pair has that type.
std::optional<double> pathway_likelihood(const PathwayMatrix& empirical, const PathwayMatrix& model, PairType type);

/// Tau values of the shared pairs, aligned: {empirical, model, type}.
struct AlignedPathways {
  std::vector<CountyIndex> from, to;
  std::vector<double> empirical, model;
  std::vector<PairType> types;
};
AlignedPathways align_pathways(const PathwayMatrix& a, const PathwayMatrix& b);

}  // namespace lexdiff
