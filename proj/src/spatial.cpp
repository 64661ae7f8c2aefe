#include "lexdiff/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lexdiff/error.hpp"

namespace lexdiff {

std::vector<CountyIndex> populated_counties(const CountyAssignment& counties) {
  std::vector<CountyIndex> out;
  for (std::size_t c = 0; c < counties.num_counties(); ++c) {
    if (counties.agent_count(static_cast<CountyIndex>(c)) > 0) out.push_back(static_cast<CountyIndex>(c));
  }
  return out;
}

Aggregation aggregate(std::span<const double> uses_per_county, const CountyAssignment& counties, bool per_capita) {
  if (uses_per_county.size() != counties.num_counties()) {
    throw InputError("use counts cover " + std::to_string(uses_per_county.size()) + " counties, expected " +
                     std::to_string(counties.num_counties()));
  }
  Aggregation out;
  for (std::size_t c = 0; c < counties.num_counties(); ++c) {
    const auto idx = static_cast<CountyIndex>(c);
    const std::uint32_t agents = counties.agent_count(idx);
    if (agents == 0) {
      out.excluded.push_back(idx);
      continue;
    }
    out.distribution.counties.push_back(idx);
    out.distribution.values.push_back(per_capita ? uses_per_county[c] / agents : uses_per_county[c]);
  }
  return out;
}

Aggregation aggregate_records(std::span<const std::string> record_counties, const CountyAssignment& counties,
                              bool per_capita) {
  std::vector<double> uses(counties.num_counties(), 0.0);
  std::vector<std::string> rejected;
  for (const std::string& fips : record_counties) {
    if (auto idx = counties.index_of(fips)) {
      uses[*idx] += 1.0;
    } else {
      rejected.push_back(fips);
    }
  }
  auto out = aggregate(uses, counties, per_capita);
  out.rejected = std::move(rejected);
  return out;
}

SpatialWeights::SpatialWeights(std::size_t n, std::size_t k, std::vector<std::uint32_t> neighbors,
                               std::vector<double> weights, bool self_included)
    : n_(n), k_(k), neighbors_(std::move(neighbors)), weights_(std::move(weights)), self_included_(self_included) {
  if (neighbors_.size() != n * k || weights_.size() != n * k) throw InputError("spatial weights must hold n*k entries");
  for (std::uint32_t j : neighbors_) {
    if (j >= n) throw InputError("spatial neighbour index out of range");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = this->weights(i);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("spatial weight rows must sum to 1");
  }
}

SpatialWeights SpatialWeights::identity(std::size_t n) {
  std::vector<std::uint32_t> nb(n);
  std::iota(nb.begin(), nb.end(), 0u);
  return SpatialWeights(n, n == 0 ? 0 : 1, std::move(nb), std::vector<double>(n, 1.0), true);
}

double great_circle_km(double lat1, double lon1, double lat2, double lon2) noexcept {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

SpatialWeights knn_weights(std::span<const County> locations, std::size_t k, bool include_self) {
  const std::size_t n = locations.size();
  if (n == 0) throw InputError("spatial weights need at least one location");
  if (k == 0) throw InputError("neighbourhood size must be positive");
  const std::size_t cap = include_self ? n : n - 1;
  if (cap == 0) throw InputError("a single location has no neighbours other than itself");
  k = std::min(k, cap);

  std::vector<std::uint32_t> neighbors;
  neighbors.reserve(n * k);
  std::vector<std::pair<double, std::uint32_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Self sorts ahead of any co-located county.
      const double d = j == i ? -1.0
                              : great_circle_km(locations[i].lat, locations[i].lon, locations[j].lat, locations[j].lon);
      dist[j] = {d, static_cast<std::uint32_t>(j)};
    }
    const std::size_t skip = include_self ? 0 : 1;
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k + skip), dist.end());
    for (std::size_t m = skip; m < k + skip; ++m) neighbors.push_back(dist[m].second);
  }
  return SpatialWeights(n, k, std::move(neighbors), std::vector<double>(n * k, 1.0 / static_cast<double>(k)),
                        include_self);
}

SpatialWeights knn_weights(const CountyAssignment& counties, std::span<const CountyIndex> universe, std::size_t k,
                           bool include_self) {
  std::vector<County> locs;
  locs.reserve(universe.size());
  for (CountyIndex c : universe) locs.push_back(counties.county(c));
  return knn_weights(locs, k, include_self);
}

namespace {

void require_size(std::size_t n, const SpatialWeights& w) {
  if (w.size() != n) {
    throw InputError("spatial weights cover " + std::to_string(w.size()) + " locations, values cover " +
                     std::to_string(n));
  }
}

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

}  // namespace

std::optional<std::vector<double>> getis_ord(std::span<const double> x, const SpatialWeights& weights) {
  const std::size_t n = x.size();
  require_size(n, weights);
  if (n < 2) return std::nullopt;
  const double mean = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / static_cast<double>(n));
  if (!(s > 0.0)) return std::nullopt;

  const double nd = static_cast<double>(n);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = weights.neighbors(i);
    const auto w = weights.weights(i);
    double lag = 0.0, wsum = 0.0, w2 = 0.0;
    for (std::size_t m = 0; m < nb.size(); ++m) {
      lag += w[m] * x[nb[m]];
      wsum += w[m];
      w2 += w[m] * w[m];
    }
    const double var = (nd * w2 - wsum * wsum) / (nd - 1.0);
    // A neighbourhood spanning every county with equal weights has no spread.
    z[i] = var > 1e-12 * nd * w2 ? (lag - mean * wsum) / (s * std::sqrt(var)) : 0.0;
  }
  return z;
}

SpatialDistribution getis_ord_smooth(const SpatialDistribution& dist, const SpatialWeights& weights) {
  SpatialDistribution out = dist;
  out.smoothed = true;
  auto z = getis_ord(dist.values, weights);
  if (z && std::any_of(z->begin(), z->end(), [&](double v) { return v != z->front(); })) {
    out.values = std::move(*z);
    out.degenerate = false;
  } else {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    out.degenerate = true;
  }
  return out;
}

std::optional<double> lees_l(std::span<const double> x, std::span<const double> y, const SpatialWeights& weights) {
  const std::size_t n = x.size();
  if (y.size() != n) throw InputError("Lee's L needs maps over the same counties");
  require_size(n, weights);
  if (n == 0) return std::nullopt;
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;

  double cross = 0.0, rowsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = weights.neighbors(i);
    const auto w = weights.weights(i);
    double lx = 0.0, ly = 0.0, ws = 0.0;
    for (std::size_t m = 0; m < nb.size(); ++m) {
      lx += w[m] * (x[nb[m]] - mx);
      ly += w[m] * (y[nb[m]] - my);
      ws += w[m];
    }
    cross += lx * ly;
    rowsq += ws * ws;
  }
  return static_cast<double>(n) / rowsq * cross / (std::sqrt(sxx) * std::sqrt(syy));
}

std::optional<double> lees_l(const SpatialDistribution& x, const SpatialDistribution& y, const SpatialWeights& weights) {
  if (x.counties != y.counties) throw InputError("Lee's L needs maps over the same counties");
  return lees_l(x.values, y.values, weights);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("correlation needs equal-length series");
  if (x.empty()) return std::nullopt;
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

Similarity classify_similarity(double l) noexcept {
  if (l >= kVerySimilar) return Similarity::very_similar;
  if (l >= kBroadlySimilar) return Similarity::broadly_similar;
  return Similarity::not_similar;
}

std::string_view to_string(Similarity s) noexcept {
  switch (s) {
    case Similarity::very_similar: return "very_similar";
    case Similarity::broadly_similar: return "broadly_similar";
    case Similarity::not_similar: return "not_similar";
  }
  return "unknown";
}

}  // namespace lexdiff
