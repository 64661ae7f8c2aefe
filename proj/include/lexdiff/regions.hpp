#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lexdiff {

struct PrincipalRegions {
  /// components x counties; rows are orthonormal.
  std::vector<std::vector<double>> loadings;
  /// Share of total variance per component, nonincreasing.
  std::vector<double> explained_variance_ratio;
  std::vector<double> singular_values;
  std::size_t requested = 0;
  std::vector<std::string> warnings;
};

/// Principal components of a words x counties matrix after centring each
/// county column. Each component's largest-magnitude loading is made
/// positive. Fewer than k components come back (with a warning) when the
/// centred matrix has lower rank.
PrincipalRegions principal_regions(const std::vector<std::vector<double>>& word_by_county, std::size_t k = 5);

}  // namespace lexdiff
