#include "lexdiff/pathways.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lexdiff/error.hpp"

namespace lexdiff {

namespace {

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Counts pairs i < j with key[i] > key[j] while merge-sorting `key`.
std::int64_t count_inversions(std::vector<double>& key, std::vector<double>& buffer) {
  const std::size_t n = key.size();
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, out = lo;
      while (a < mid && b < hi) {
        if (key[b] < key[a]) {
          swaps += static_cast<std::int64_t>(mid - a);
          buffer[out++] = key[b++];
        } else {
          buffer[out++] = key[a++];
        }
      }
      while (a < mid) buffer[out++] = key[a++];
      while (b < hi) buffer[out++] = key[b++];
    }
    key.swap(buffer);
  }
  return swaps;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("Kendall's tau needs equal-length series");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    x_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      joint_ties += tie_pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> key(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) key[i] = y[order[i]];
  const std::int64_t discordant = count_inversions(key, buffer);

  std::int64_t y_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && key[j] == key[i]) ++j;
    y_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t total = tie_pairs(static_cast<std::int64_t>(n));
  const std::int64_t s = total - x_ties - y_ties + joint_ties - 2 * discordant;
  const std::int64_t dx = total - x_ties, dy = total - y_ties;
  if (dx == 0 || dy == 0) return 0.0;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

double zero_inflated_tau(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InputError("zero-inflated tau needs equal-length series");
  const std::size_t n = u.size();
  if (n < 2) throw InputError("zero-inflated tau needs at least two observations");
  std::size_t n00 = 0, n01 = 0, n10 = 0;
  std::vector<double> pu, pv;
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = u[i] > 0.0, b = v[i] > 0.0;
    if (a && b) {
      pu.push_back(u[i]);
      pv.push_back(v[i]);
    } else if (a) {
      ++n10;
    } else if (b) {
      ++n01;
    } else {
      ++n00;
    }
  }
  const double nd = static_cast<double>(n);
  const double p00 = static_cast<double>(n00) / nd, p01 = static_cast<double>(n01) / nd;
  const double p10 = static_cast<double>(n10) / nd, p11 = static_cast<double>(pu.size()) / nd;
  const double tau11 = pu.size() < 2 ? 0.0 : kendall_tau_b(pu, pv);
  return p11 * p11 * tau11 + 2.0 * (p00 * p11 - p01 * p10);
}

void SpatialTimeSeries::validate() const {
  if (num_counties == 0) throw InputError("time series needs at least one county");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].size() % num_counties != 0) {
      throw InputError("time-series segment " + std::to_string(s) + " is not a whole number of blocks");
    }
    for (double v : segments[s]) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("adoption values must be finite and nonnegative");
    }
  }
}

std::vector<double> block_series(const std::vector<std::vector<std::uint32_t>>& county_uses_per_iteration,
                                 std::span<const std::uint32_t> county_agents, std::size_t block_length) {
  if (block_length == 0) throw InputError("block length must be positive");
  const std::size_t c = county_agents.size();
  const std::size_t iterations = county_uses_per_iteration.size();
  std::size_t blocks = iterations / block_length;
  if (blocks == 0 && iterations > 0) blocks = 1;
  std::vector<double> out(blocks * c, 0.0);
  for (std::size_t t = 0; t < iterations && t / block_length < blocks; ++t) {
    const auto& row = county_uses_per_iteration[t];
    if (row.size() != c) throw InputError("county use row has the wrong width");
    double* block = out.data() + (t / block_length) * c;
    for (std::size_t k = 0; k < c; ++k) block[k] += row[k];
  }
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t k = 0; k < c; ++k) {
      out[b * c + k] = county_agents[k] > 0 ? out[b * c + k] / county_agents[k] : 0.0;
    }
  }
  return out;
}

CountyType classify_county(std::uint64_t urbanized_population) noexcept {
  return urbanized_population >= kUrbanThreshold ? CountyType::urban : CountyType::rural;
}

PairType pair_type(CountyType a, CountyType b) noexcept {
  if (a != b) return PairType::urban_rural;
  return a == CountyType::urban ? PairType::urban_urban : PairType::rural_rural;
}

std::string_view to_string(CountyType t) noexcept { return t == CountyType::urban ? "urban" : "rural"; }

std::string_view to_string(PairType t) noexcept {
  switch (t) {
    case PairType::urban_urban: return "urban-urban";
    case PairType::urban_rural: return "urban-rural";
    case PairType::rural_rural: return "rural-rural";
  }
  return "unknown";
}

const Pathway* PathwayMatrix::find(CountyIndex from, CountyIndex to) const {
  auto it = std::lower_bound(pathways.begin(), pathways.end(), std::pair{from, to},
                             [](const Pathway& p, const std::pair<CountyIndex, CountyIndex>& key) {
                               return std::pair{p.from, p.to} < key;
                             });
  if (it == pathways.end() || it->from != from || it->to != to) return nullptr;
  return &*it;
}

PathwayMatrix build_pathways(const SpatialTimeSeries& series,
                             const std::unordered_map<std::uint64_t, std::uint32_t>& edge_counts,
                             std::span<const CountyType> county_types, std::size_t lag, std::uint32_t min_edges) {
  series.validate();
  const std::size_t c = series.num_counties;
  if (county_types.size() != c) throw InputError("county types do not cover the time-series counties");
  if (lag == 0) throw InputError("pathway lag must be at least one block");

  // Leading (t) and lagged (t + lag) series per county, concatenated over segments.
  std::vector<std::vector<double>> lead(c), follow(c);
  for (const auto& seg : series.segments) {
    const std::size_t blocks = seg.size() / c;
    for (std::size_t t = 0; t + lag < blocks; ++t) {
      for (std::size_t k = 0; k < c; ++k) {
        lead[k].push_back(seg[t * c + k]);
        follow[k].push_back(seg[(t + lag) * c + k]);
      }
    }
  }

  std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;
  for (const auto& [key, count] : edge_counts) {
    if (count < min_edges) continue;
    const std::uint64_t i = key / c, j = key % c;
    if (i >= c || i == j) continue;
    pairs.emplace_back(key, count);
  }
  std::sort(pairs.begin(), pairs.end());

  PathwayMatrix out;
  if (!pairs.empty() && lead[0].size() < 2) {
    throw InputError("time series too short for pathways: need at least two lagged observations");
  }
  out.pathways.reserve(pairs.size());
  for (const auto& [key, count] : pairs) {
    const auto i = static_cast<CountyIndex>(key / c), j = static_cast<CountyIndex>(key % c);
    out.pathways.push_back(
        Pathway{i, j, zero_inflated_tau(lead[i], follow[j]), count, pair_type(county_types[i], county_types[j])});
  }
  return out;
}

AlignedPathways align_pathways(const PathwayMatrix& a, const PathwayMatrix& b) {
  AlignedPathways out;
  auto ia = a.pathways.begin();
  auto ib = b.pathways.begin();
  while (ia != a.pathways.end() && ib != b.pathways.end()) {
    const auto ka = std::pair{ia->from, ia->to}, kb = std::pair{ib->from, ib->to};
    if (ka < kb) {
      ++ia;
    } else if (kb < ka) {
      ++ib;
    } else {
      out.from.push_back(ia->from);
      out.to.push_back(ia->to);
      out.empirical.push_back(ia->tau);
      out.model.push_back(ib->tau);
      out.types.push_back(ia->type);
      ++ia;
      ++ib;
    }
  }
  return out;
}

namespace {

double likelihood(std::span<const double> e, std::span<const double> m) {
  double se = 0.0, sm = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    se += std::max(e[k], kPathwayFloor);
    sm += std::max(m[k], kPathwayFloor);
  }
  double cross = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    cross += std::max(e[k], kPathwayFloor) / se * std::log(std::max(m[k], kPathwayFloor) / sm);
  }
  return std::exp(cross);
}

}  // namespace

double pathway_likelihood(const PathwayMatrix& empirical, const PathwayMatrix& model) {
  const auto aligned = align_pathways(empirical, model);
  if (aligned.empirical.empty()) throw InputError("empirical and model pathways share no county pair");
  return likelihood(aligned.empirical, aligned.model);
}

std::optional<double> pathway_likelihood(const PathwayMatrix& empirical, const PathwayMatrix& model, PairType type) {
  const auto aligned = align_pathways(empirical, model);
  std::vector<double> e, m;
  for (std::size_t k = 0; k < aligned.types.size(); ++k) {
    if (aligned.types[k] != type) continue;
    e.push_back(aligned.empirical[k]);
    m.push_back(aligned.model[k]);
  }
  if (e.empty()) return std::nullopt;
  return likelihood(e, m);
}

}  // namespace lexdiff
