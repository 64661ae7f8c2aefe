#include "lexdiff/regions.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "lexdiff/error.hpp"

namespace lexdiff {

PrincipalRegions principal_regions(const std::vector<std::vector<double>>& word_by_county, std::size_t k) {
  if (k == 0) throw InputError("number of components must be positive");
  if (word_by_county.empty()) throw InputError("principal regions need at least one word");
  const std::size_t cols = word_by_county.front().size();
  if (cols == 0) throw InputError("principal regions need at least one county");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(word_by_county.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < word_by_county.size(); ++r) {
    if (word_by_county[r].size() != cols) throw InputError("word rows cover different numbers of counties");
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = word_by_county[r][c];
      if (!std::isfinite(v)) throw InputError("non-finite value in word-by-county matrix");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  m.rowwise() -= m.colwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  PrincipalRegions out;
  out.requested = k;
  const double total = s.squaredNorm();
  const double tol = s.size() > 0 ? s(0) * 1e-10 * static_cast<double>(std::max(m.rows(), m.cols())) : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol && s(i) > 0.0) ++rank;
  }
  if (rank < k) {
    out.warnings.push_back("requested " + std::to_string(k) + " components but the centred matrix has rank " +
                           std::to_string(rank) + "; returning " + std::to_string(rank));
  }
  const std::size_t kept = std::min(k, rank);
  for (std::size_t c = 0; c < kept; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    Eigen::VectorXd load = v.col(ci);
    Eigen::Index arg = 0;
    load.cwiseAbs().maxCoeff(&arg);
    if (load(arg) < 0.0) load = -load;
    out.loadings.emplace_back(load.data(), load.data() + load.size());
    out.singular_values.push_back(s(ci));
    out.explained_variance_ratio.push_back(s(ci) * s(ci) / total);
  }
  return out;
}

}  // namespace lexdiff
