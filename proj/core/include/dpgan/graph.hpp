#pragma once

#include "dpgan/autodiff.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dpgan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// An undirected attributed graph: the unit of imputation.
///
/// The adjacency is symmetric and binary with an empty diagonal; self-loops are
/// only introduced inside the GCN normalization.
struct Graph {
  Matrix node_features;  // N x D
  SparseMatrix adjacency;  // N x N
  std::optional<int> graph_label;

  Eigen::Index num_nodes() const { return node_features.rows(); }
  Eigen::Index num_features() const { return node_features.cols(); }

  /// Builds a graph from an undirected edge list (0-based). Duplicate edges
  /// collapse, self-loops are dropped, and the result is symmetrized.
  static Graph from_edges(Matrix features, std::span<const std::pair<int, int>> edges,
                          std::optional<int> label = std::nullopt);

  /// Throws ValidationError when an invariant is violated.
  void validate() const;
};

/// Binary observation indicator (1 = observed, 0 = missing).
class MaskMatrix {
 public:
  MaskMatrix() = default;
  /// Throws ValidationError if any entry is not exactly 0 or 1.
  explicit MaskMatrix(Matrix entries);

  static MaskMatrix ones(Eigen::Index rows, Eigen::Index cols);
  static MaskMatrix zeros(Eigen::Index rows, Eigen::Index cols);

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  bool observed(Eigen::Index i, Eigen::Index j) const { return entries_(i, j) != 0.0; }
  Eigen::Index missing_count() const;
  /// Entrywise product (an entry is observed only if observed in both).
  MaskMatrix operator&(const MaskMatrix& other) const;

  friend bool operator==(const MaskMatrix& a, const MaskMatrix& b) { return a.entries_ == b.entries_; }

 private:
  Matrix entries_;
};

struct DatasetSplit {
  std::vector<int> train_ids;
  std::vector<int> val_ids;
  std::vector<int> test_ids;
  std::uint64_t seed = 0;
};

/// Per-feature min/max used for min-max scaling to [0, 1].
struct NormStats {
  Vector per_feature_min;
  Vector per_feature_max;

  bool degenerate(Eigen::Index j) const { return per_feature_max(j) == per_feature_min(j); }
  Matrix normalize(const Matrix& x) const;
  Matrix denormalize(const Matrix& x) const;
};

/// Fits min/max over every row of the selected graphs (all graphs when
/// `fit_ids` is empty).
NormStats fit_norm_stats(std::span<const Graph> graphs, std::span<const int> fit_ids = {});

/// Dataset-wide min-max normalization. Constant dimensions map to 0.
std::pair<std::vector<Graph>, NormStats> normalize_features(std::span<const Graph> graphs,
                                                            std::span<const int> fit_ids = {});

/// i.i.d. Bernoulli missingness: each entry is 0 with probability `missing_rate`.
MaskMatrix sample_mask(Eigen::Index n, Eigen::Index d, double missing_rate, std::uint64_t rng_seed);

/// Shuffled 70-10-20 style split; sizes are rounded shares with the remainder
/// going to the training part.
DatasetSplit split_dataset(int num_graphs, std::array<double, 3> ratios, std::uint64_t seed);
inline DatasetSplit split_dataset(int num_graphs, std::uint64_t seed) {
  return split_dataset(num_graphs, {0.7, 0.1, 0.2}, seed);
}

/// Observed entries copied, missing entries zeroed.
Matrix apply_mask(const Matrix& x, const MaskMatrix& r);

/// Structural operators derived from an adjacency, computed once per graph
/// (or per pooled subgraph) and shared by the layers.
struct Topology {
  SparseMatrix adjacency;
  ad::SparseOperatorPtr adjacency_op;  // A
  ad::SparseOperatorPtr gcn_op;        // D~^{-1/2} (A + I) D~^{-1/2}
  Vector degree;                       // row sums of A

  Eigen::Index num_nodes() const { return adjacency.rows(); }

  static Topology from_adjacency(SparseMatrix adjacency);
  /// Induced subgraph on `idx` (which must be sorted and unique).
  Topology restrict_to(std::span<const int> idx) const;
  /// Induced subgraph of A + A^2 on `idx` (connectivity augmentation).
  Topology restrict_augmented(std::span<const int> idx) const;
};

}  // namespace dpgan
