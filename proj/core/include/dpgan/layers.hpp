#pragma once

// Differentiable graph primitives shared by the generator and the critic.

#include "dpgan/autodiff.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/params.hpp"
#include "dpgan/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dpgan {

/// Symmetric-normalized graph convolution: A_hat x W + b.
struct GcnParams {
  ad::Var weight;  // D_in x D_out
  ad::Var bias;    // 1 x D_out

  static GcnParams init(Eigen::Index in, Eigen::Index out, SplitRng& rng);
  void register_into(ParameterSet& set, const std::string& prefix) const;
};

ad::Var gcn_forward(const ad::Var& x, const Topology& topology, const GcnParams& params);

/// Local-extrema scoring projections.
struct LeConvParams {
  ad::Var w_self;  // D x 1
  ad::Var w_src;   // D x 1
  ad::Var w_dst;   // D x 1
  ad::Var bias;    // 1 x 1

  static LeConvParams init(Eigen::Index in, SplitRng& rng);
  void register_into(ParameterSet& set, const std::string& prefix) const;
};

/// y_i = x_i w_self + sum_{j in N(i)} (x_i w_src - x_j w_dst) + b, returned as N x 1
/// (pre-tanh; the pooling gate applies tanh).
ad::Var leconv_score(const ad::Var& x, const Topology& topology, const LeConvParams& params);

/// ceil(ratio * n), never below 1 for n >= 1.
int pooled_size(int n, double ratio);

/// Indices of the k = ceil(ratio * N) largest scores, ties to the lower
/// index, returned in ascending order.
std::vector<int> topk_select(std::span<const double> scores, double ratio);

struct PoolResult {
  ad::Var pooled_features;  // k x D
  Topology pooled;          // induced subgraph on idx
  std::vector<int> idx;     // ascending, size k
  ad::Var scores;           // N x 1, pre-tanh

  const SparseMatrix& pooled_adjacency() const { return pooled.adjacency; }
};

/// Gated top-k pooling: X' = (X * tanh(y))_idx, A' = A_idx,idx. With
/// `augment_connectivity`, A' is taken from A + A^2 instead.
PoolResult graph_pool(const ad::Var& x, const Topology& topology, double ratio, const LeConvParams& params,
                      bool augment_connectivity = false);

/// Scatters the rows of `x_small` into an `original_size x C` zero matrix.
ad::Var graph_unpool(const ad::Var& x_small, std::span<const int> idx, Eigen::Index original_size);

/// Two fully connected layers with a LeakyReLU in between:
/// fc2(LeakyReLU(fc1(v))) applied to row vectors v.
struct MixerParams {
  ad::Var w1;  // in x hidden
  ad::Var b1;  // 1 x hidden
  ad::Var w2;  // hidden x out
  ad::Var b2;  // 1 x out
  double leaky_slope = 0.2;

  static MixerParams init(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, double leaky_slope,
                          SplitRng& rng);
  void register_into(ParameterSet& set, const std::string& prefix) const;
  Eigen::Index in_dim() const { return w1.rows(); }
  Eigen::Index out_dim() const { return w2.cols(); }
};

/// Mixes along the feature axis: each row passes through the shared MLP.
ad::Var feature_mix_forward(const ad::Var& x, const MixerParams& params);

/// Mixes along the node axis: each feature column (length N_max) passes
/// through the shared MLP. Rows with node_valid == 0 are zeroed before and
/// after mixing.
ad::Var node_mix_forward(const ad::Var& x_pad, const Vector& node_valid, const MixerParams& params);

/// Node-axis mixing that changes the node dimension (in_dim -> out_dim).
/// Optional validity vectors mask the input and output rows.
ad::Var node_mix_resize(const ad::Var& x, const MixerParams& params, const Vector* in_valid,
                        const Vector* out_valid);

/// Row-wise affine map x W + b.
ad::Var linear(const ad::Var& x, const ad::Var& weight, const ad::Var& bias);

/// Zero-pads rows to `total_rows` / keeps the first `n` rows.
ad::Var pad_rows(const ad::Var& x, Eigen::Index total_rows);
ad::Var take_rows(const ad::Var& x, Eigen::Index n);

/// Multiplies each row by a fixed 0/1 (or any) weight.
ad::Var mask_rows(const ad::Var& x, const Vector& row_weights);

/// 1 for the first `valid` entries, 0 for the rest.
Vector validity(Eigen::Index valid, Eigen::Index total);

}  // namespace dpgan
