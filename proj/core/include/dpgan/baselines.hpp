#pragma once

#include "dpgan/graph.hpp"

#include <span>
#include <string_view>

namespace dpgan {

/// Per-feature means of observed values; dimensions with no observed value
/// get 0.
struct FeatureMeans {
  Vector means;
  static FeatureMeans fit(std::span<const Matrix> features, std::span<const MaskMatrix> masks);
  static FeatureMeans fit(const Matrix& x, const MaskMatrix& r);
};

/// Missing entries take the per-feature mean; observed entries are kept.
Matrix mean_impute(const Matrix& x, const MaskMatrix& r, const FeatureMeans& stats);

enum class KnnDistance { EuclideanObserved };

struct KnnConfig {
  int k = 5;
  KnnDistance distance = KnnDistance::EuclideanObserved;
};

/// Fills each missing entry with the mean of the k nearest rows (squared
/// euclidean distance over commonly observed dimensions, rescaled by
/// D / |common|) that observe that dimension. Ties go to the lower row index.
/// Entries no neighbour observes fall back to `fallback`; a single-row input
/// falls back to mean imputation entirely.
Matrix knn_impute(const Matrix& x, const MaskMatrix& r, const KnnConfig& cfg, const FeatureMeans& fallback);

}  // namespace dpgan
