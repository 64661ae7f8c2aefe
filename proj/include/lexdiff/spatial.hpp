#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexdiff/network.hpp"

namespace lexdiff {

/// One value per county over a fixed county universe (indices into a
/// CountyAssignment).
struct SpatialDistribution {
  std::vector<CountyIndex> counties;
  std::vector<double> values;
  std::string word;
  std::string source;        // "empirical" or a mode name
  bool smoothed = false;
  bool degenerate = false;   // smoothing hit zero variance

  std::size_t size() const noexcept { return values.size(); }
};

struct Aggregation {
  SpatialDistribution distribution;
  std::vector<CountyIndex> excluded;    // zero-agent counties
  std::vector<std::string> rejected;    // records naming an unknown county
};

/// Uses per county, divided by the county's agent count when per_capita.
/// Zero-agent counties are left out of the universe and listed in `excluded`.
Aggregation aggregate(std::span<const double> uses_per_county, const CountyAssignment& counties, bool per_capita);

/// Same, from raw records that each name a county code.
Aggregation aggregate_records(std::span<const std::string> record_counties, const CountyAssignment& counties,
                              bool per_capita);

/// Counties with at least one agent, ascending.
std::vector<CountyIndex> populated_counties(const CountyAssignment& counties);

/// Row-standardized neighbour lists with the same size k for every row.
class SpatialWeights {
 public:
  SpatialWeights() = default;
  /// `neighbors` and `weights` hold n * k entries, row by row.
  SpatialWeights(std::size_t n, std::size_t k, std::vector<std::uint32_t> neighbors, std::vector<double> weights,
                 bool self_included);

  /// Each location its own sole neighbour.
  static SpatialWeights identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  bool self_included() const noexcept { return self_included_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return std::span<const std::uint32_t>(neighbors_).subspan(i * k_, k_);
  }
  std::span<const double> weights(std::size_t i) const { return std::span<const double>(weights_).subspan(i * k_, k_); }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
  bool self_included_ = false;
};

inline constexpr std::size_t kDefaultNeighborhood = 25;

/// Great-circle distance in kilometres.
double great_circle_km(double lat1, double lon1, double lat2, double lon2) noexcept;

/// k nearest locations by centroid great-circle distance (self first when
/// included, ties by index), each weighted 1/k. k is capped at the number of
/// locations.
SpatialWeights knn_weights(std::span<const County> locations, std::size_t k = kDefaultNeighborhood,
                           bool include_self = true);

/// knn_weights over the distribution's county universe.
SpatialWeights knn_weights(const CountyAssignment& counties, std::span<const CountyIndex> universe,
                           std::size_t k = kDefaultNeighborhood, bool include_self = true);

/// Local Getis-Ord G* z-scores with the global mean and standard deviation.
/// A constant map, or windows so wide the result is constant, returns zeros
/// with `degenerate` set.
SpatialDistribution getis_ord_smooth(const SpatialDistribution& dist, const SpatialWeights& weights);

/// Raw-vector form of getis_ord_smooth; returns nullopt on zero variance.
std::optional<std::vector<double>> getis_ord(std::span<const double> x, const SpatialWeights& weights);

/// Lee's L bivariate spatial association; nullopt when x or y is constant.
std::optional<double> lees_l(std::span<const double> x, std::span<const double> y, const SpatialWeights& weights);
std::optional<double> lees_l(const SpatialDistribution& x, const SpatialDistribution& y,
                             const SpatialWeights& weights);

/// Pearson correlation; nullopt when either side is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

enum class Similarity : std::uint8_t { very_similar, broadly_similar, not_similar };

inline constexpr double kVerySimilar = 0.4;
inline constexpr double kBroadlySimilar = 0.13;

Similarity classify_similarity(double l) noexcept;
std::string_view to_string(Similarity s) noexcept;

}  // namespace lexdiff
