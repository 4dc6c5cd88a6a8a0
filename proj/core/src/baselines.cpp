#include "dpgan/baselines.hpp"

#include "dpgan/errors.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace dpgan {

FeatureMeans FeatureMeans::fit(std::span<const Matrix> features, std::span<const MaskMatrix> masks) {
  if (features.size() != masks.size()) throw ValidationError("FeatureMeans: feature/mask count mismatch");
  if (features.empty()) throw ValidationError("FeatureMeans: no data");
  const Eigen::Index d = features.front().cols();
  Vector sum = Vector::Zero(d);
  Vector count = Vector::Zero(d);
  for (std::size_t g = 0; g < features.size(); ++g) {
    const Matrix& x = features[g];
    const MaskMatrix& r = masks[g];
    if (x.cols() != d || r.rows() != x.rows() || r.cols() != d) {
      throw ValidationError("FeatureMeans: shape mismatch");
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (r.observed(i, j)) {
          sum(j) += x(i, j);
          count(j) += 1.0;
        }
      }
    }
  }
  FeatureMeans m{Vector::Zero(d)};
  for (Eigen::Index j = 0; j < d; ++j) {
    if (count(j) > 0.0) m.means(j) = sum(j) / count(j);
  }
  return m;
}

FeatureMeans FeatureMeans::fit(const Matrix& x, const MaskMatrix& r) {
  return fit(std::span<const Matrix>(&x, 1), std::span<const MaskMatrix>(&r, 1));
}

Matrix mean_impute(const Matrix& x, const MaskMatrix& r, const FeatureMeans& stats) {
  if (x.rows() != r.rows() || x.cols() != r.cols()) throw ValidationError("mean_impute: shape mismatch");
  if (stats.means.size() != x.cols()) throw ValidationError("mean_impute: feature count mismatch");
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!r.observed(i, j)) out(i, j) = stats.means(j);
    }
  }
  return out;
}

Matrix knn_impute(const Matrix& x, const MaskMatrix& r, const KnnConfig& cfg, const FeatureMeans& fallback) {
  if (x.rows() != r.rows() || x.cols() != r.cols()) throw ValidationError("knn_impute: shape mismatch");
  if (cfg.k < 1) throw ValidationError("knn_impute: k must be >= 1");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n <= 1) {
    if (r.missing_count() > 0) std::clog << "warning: knn_impute on a single-node graph, using mean imputation\n";
    return mean_impute(x, r, fallback);
  }
  Matrix out = x;
  std::vector<std::pair<double, Eigen::Index>> candidates;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool any_missing = false;
    for (Eigen::Index j = 0; j < d; ++j) any_missing = any_missing || !r.observed(i, j);
    if (!any_missing) continue;

    candidates.clear();
    for (Eigen::Index other = 0; other < n; ++other) {
      if (other == i) continue;
      double dist = 0.0;
      int common = 0;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (r.observed(i, j) && r.observed(other, j)) {
          const double diff = x(i, j) - x(other, j);
          dist += diff * diff;
          ++common;
        }
      }
      if (common == 0) continue;
      candidates.emplace_back(dist * static_cast<double>(d) / common, other);
    }
    // Pairs order by distance then by row index.
    std::sort(candidates.begin(), candidates.end());
    const std::size_t k = std::min(candidates.size(), static_cast<std::size_t>(cfg.k));

    for (Eigen::Index j = 0; j < d; ++j) {
      if (r.observed(i, j)) continue;
      double sum = 0.0;
      int count = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const Eigen::Index nb = candidates[c].second;
        if (r.observed(nb, j)) {
          sum += x(nb, j);
          ++count;
        }
      }
      out(i, j) = count > 0 ? sum / count : fallback.means(j);
    }
  }
  return out;
}

}  // namespace dpgan
