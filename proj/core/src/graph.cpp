#include "dpgan/graph.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/rng.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace dpgan {

Graph Graph::from_edges(Matrix features, std::span<const std::pair<int, int>> edges,
                        std::optional<int> label) {
  const auto n = static_cast<int>(features.rows());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ValidationError(fmt::format("edge ({}, {}) references a node outside [0, {})", u, v, n));
    }
    if (u == v) continue;
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  SparseMatrix adjacency(n, n);
  // Duplicates are summed by setFromTriplets; clamp back to binary.
  adjacency.setFromTriplets(triplets.begin(), triplets.end());
  for (int k = 0; k < adjacency.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(adjacency, k); it; ++it) it.valueRef() = 1.0;
  }
  adjacency.makeCompressed();
  Graph g{std::move(features), std::move(adjacency), label};
  return g;
}

void Graph::validate() const {
  if (num_nodes() < 1) throw ValidationError("graph has no nodes");
  if (adjacency.rows() != num_nodes() || adjacency.cols() != num_nodes()) {
    throw ValidationError("adjacency shape does not match node count");
  }
  if (!node_features.allFinite()) throw ValidationError("node features contain non-finite values");
  const SparseMatrix diff = SparseMatrix(adjacency.transpose()) - adjacency;
  if (diff.norm() != 0.0) throw ValidationError("adjacency is not symmetric");
  for (int k = 0; k < adjacency.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(adjacency, k); it; ++it) {
      if (it.row() == it.col() && it.value() != 0.0) {
        throw ValidationError("adjacency stores a self-loop");
      }
    }
  }
}

MaskMatrix::MaskMatrix(Matrix entries) : entries_(std::move(entries)) {
  for (Eigen::Index i = 0; i < entries_.size(); ++i) {
    const double v = entries_.data()[i];
    if (v != 0.0 && v != 1.0) throw ValidationError("mask entries must be 0 or 1");
  }
}

MaskMatrix MaskMatrix::ones(Eigen::Index rows, Eigen::Index cols) {
  return MaskMatrix(Matrix::Ones(rows, cols));
}

MaskMatrix MaskMatrix::zeros(Eigen::Index rows, Eigen::Index cols) {
  return MaskMatrix(Matrix::Zero(rows, cols));
}

Eigen::Index MaskMatrix::missing_count() const {
  return static_cast<Eigen::Index>((entries_.array() == 0.0).count());
}

MaskMatrix MaskMatrix::operator&(const MaskMatrix& other) const {
  if (rows() != other.rows() || cols() != other.cols()) {
    throw ValidationError("mask shape mismatch");
  }
  return MaskMatrix(entries_.cwiseProduct(other.entries_));
}

Matrix NormStats::normalize(const Matrix& x) const {
  if (x.cols() != per_feature_min.size()) throw ValidationError("normalize: feature count mismatch");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (degenerate(j)) {
      out.col(j).setZero();
    } else {
      const double lo = per_feature_min(j);
      const double span = per_feature_max(j) - lo;
      out.col(j) = (x.col(j).array() - lo) / span;
    }
  }
  return out;
}

Matrix NormStats::denormalize(const Matrix& x) const {
  if (x.cols() != per_feature_min.size()) {
    throw ValidationError("denormalize: feature count mismatch");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = per_feature_min(j);
    // Degenerate dimensions only ever held the constant `lo`.
    const double span = degenerate(j) ? 0.0 : per_feature_max(j) - lo;
    out.col(j) = x.col(j).array() * span + lo;
  }
  return out;
}

NormStats fit_norm_stats(std::span<const Graph> graphs, std::span<const int> fit_ids) {
  if (graphs.empty()) throw ValidationError("normalize_features: no graphs");
  std::vector<int> ids(fit_ids.begin(), fit_ids.end());
  if (ids.empty()) {
    ids.resize(graphs.size());
    std::iota(ids.begin(), ids.end(), 0);
  }
  const Eigen::Index d = graphs[0].num_features();
  NormStats stats{Vector::Constant(d, std::numeric_limits<double>::infinity()),
                  Vector::Constant(d, -std::numeric_limits<double>::infinity())};
  for (const auto& g : graphs) {
    if (g.num_features() != d) throw ValidationError("graphs disagree on feature count");
    if (!g.node_features.allFinite()) {
      throw ValidationError("normalize_features: non-finite input feature");
    }
  }
  for (int id : ids) {
    if (id < 0 || id >= static_cast<int>(graphs.size())) {
      throw ValidationError("normalize_features: fit id out of range");
    }
    const Matrix& x = graphs[static_cast<std::size_t>(id)].node_features;
    if (x.rows() == 0) continue;
    stats.per_feature_min = stats.per_feature_min.cwiseMin(x.colwise().minCoeff().transpose());
    stats.per_feature_max = stats.per_feature_max.cwiseMax(x.colwise().maxCoeff().transpose());
  }
  if (!stats.per_feature_min.allFinite()) {
    throw ValidationError("normalize_features: fit graphs contain no nodes");
  }
  return stats;
}

std::pair<std::vector<Graph>, NormStats> normalize_features(std::span<const Graph> graphs,
                                                            std::span<const int> fit_ids) {
  NormStats stats = fit_norm_stats(graphs, fit_ids);
  std::vector<Graph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    Graph copy = g;
    copy.node_features = stats.normalize(g.node_features);
    out.push_back(std::move(copy));
  }
  return {std::move(out), std::move(stats)};
}

MaskMatrix sample_mask(Eigen::Index n, Eigen::Index d, double missing_rate, std::uint64_t rng_seed) {
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw ValidationError(fmt::format("missing_rate {} outside [0, 1]", missing_rate));
  }
  SplitRng rng(rng_seed);
  Matrix entries(n, d);
  // Row-major draw order so the mask of a graph does not depend on storage order.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      entries(i, j) = rng.uniform() < missing_rate ? 0.0 : 1.0;
    }
  }
  return MaskMatrix(std::move(entries));
}

DatasetSplit split_dataset(int num_graphs, std::array<double, 3> ratios, std::uint64_t seed) {
  if (num_graphs < 3) throw ValidationError("split_dataset: need at least 3 items");
  for (double r : ratios) {
    if (!(r > 0.0)) throw ValidationError("split_dataset: ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ValidationError("split_dataset: ratios must sum to 1");
  }
  const auto n = static_cast<double>(num_graphs);
  const int n_val = static_cast<int>(std::lround(ratios[1] * n));
  const int n_test = static_cast<int>(std::lround(ratios[2] * n));
  const int n_train = num_graphs - n_val - n_test;
  if (n_train < 1) throw ValidationError("split_dataset: training share rounds to zero");

  SplitRng rng = SplitRng(seed).split("split");
  const std::vector<int> perm = rng.permutation(num_graphs);
  DatasetSplit split;
  split.seed = seed;
  split.train_ids.assign(perm.begin(), perm.begin() + n_train);
  split.val_ids.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  split.test_ids.assign(perm.begin() + n_train + n_val, perm.end());
  return split;
}

Matrix apply_mask(const Matrix& x, const MaskMatrix& r) {
  if (x.rows() != r.rows() || x.cols() != r.cols()) {
    throw ValidationError(fmt::format("apply_mask: shape mismatch {}x{} vs {}x{}", x.rows(), x.cols(),
                                      r.rows(), r.cols()));
  }
  return x.cwiseProduct(r.entries());
}

namespace {

Topology build_topology(SparseMatrix adjacency) {
  Topology t;
  const Eigen::Index n = adjacency.rows();
  t.degree = Vector::Zero(n);
  for (int k = 0; k < adjacency.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(adjacency, k); it; ++it) t.degree(it.row()) += it.value();
  }
  const Vector inv_sqrt = (t.degree.array() + 1.0).rsqrt();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(adjacency.nonZeros() + n));
  for (int k = 0; k < adjacency.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(adjacency, k); it; ++it) {
      triplets.emplace_back(it.row(), it.col(), it.value() * inv_sqrt(it.row()) * inv_sqrt(it.col()));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
  SparseMatrix normalized(n, n);
  normalized.setFromTriplets(triplets.begin(), triplets.end());
  t.gcn_op = ad::SparseOperator::make(std::move(normalized));
  t.adjacency_op = ad::SparseOperator::make(adjacency);
  t.adjacency = std::move(adjacency);
  return t;
}

SparseMatrix induced(const SparseMatrix& a, std::span<const int> idx) {
  std::vector<int> remap(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= a.rows()) throw ValidationError("restrict_to: index out of range");
    remap[static_cast<std::size_t>(idx[t])] = static_cast<int>(t);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      const int r = remap[static_cast<std::size_t>(it.row())];
      const int c = remap[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  const auto k = static_cast<Eigen::Index>(idx.size());
  SparseMatrix out(k, k);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

Topology Topology::from_adjacency(SparseMatrix adjacency) { return build_topology(std::move(adjacency)); }

Topology Topology::restrict_to(std::span<const int> idx) const {
  return build_topology(induced(adjacency, idx));
}

Topology Topology::restrict_augmented(std::span<const int> idx) const {
  SparseMatrix two_hop = adjacency * adjacency + adjacency;
  SparseMatrix binary(two_hop.rows(), two_hop.cols());
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < two_hop.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(two_hop, k); it; ++it) {
      if (it.row() != it.col() && it.value() != 0.0) triplets.emplace_back(it.row(), it.col(), 1.0);
    }
  }
  binary.setFromTriplets(triplets.begin(), triplets.end());
  return build_topology(induced(binary, idx));
}

}  // namespace dpgan
