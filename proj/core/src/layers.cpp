#include "dpgan/layers.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpgan {

GcnParams GcnParams::init(Eigen::Index in, Eigen::Index out, SplitRng& rng) {
  return {glorot(in, out, rng), zero_parameter(1, out)};
}

void GcnParams::register_into(ParameterSet& set, const std::string& prefix) const {
  set.add(prefix + ".weight", weight);
  set.add(prefix + ".bias", bias);
}

ad::Var gcn_forward(const ad::Var& x, const Topology& topology, const GcnParams& params) {
  if (x.rows() != topology.num_nodes()) {
    throw ValidationError(
        fmt::format("gcn_forward: {} feature rows for {} nodes", x.rows(), topology.num_nodes()));
  }
  if (x.cols() != params.weight.rows()) {
    throw ValidationError(
        fmt::format("gcn_forward: input width {} but weight expects {}", x.cols(), params.weight.rows()));
  }
  // Multiply by W first when it narrows the width.
  const ad::Var propagated = params.weight.cols() <= params.weight.rows()
                                 ? ad::spmm(topology.gcn_op, ad::matmul(x, params.weight))
                                 : ad::matmul(ad::spmm(topology.gcn_op, x), params.weight);
  return ad::add(propagated, ad::broadcast_rows(params.bias, x.rows()));
}

LeConvParams LeConvParams::init(Eigen::Index in, SplitRng& rng) {
  return {glorot(in, 1, rng), glorot(in, 1, rng), glorot(in, 1, rng), zero_parameter(1, 1)};
}

void LeConvParams::register_into(ParameterSet& set, const std::string& prefix) const {
  set.add(prefix + ".w_self", w_self);
  set.add(prefix + ".w_src", w_src);
  set.add(prefix + ".w_dst", w_dst);
  set.add(prefix + ".bias", bias);
}

ad::Var leconv_score(const ad::Var& x, const Topology& topology, const LeConvParams& params) {
  if (x.rows() != topology.num_nodes() || x.cols() != params.w_self.rows()) {
    throw ValidationError("leconv_score: shape mismatch");
  }
  const Eigen::Index n = x.rows();
  const ad::Var self_term = ad::matmul(x, params.w_self);
  const ad::Var src = ad::mul(ad::constant(topology.degree), ad::matmul(x, params.w_src));
  const ad::Var dst = ad::spmm(topology.adjacency_op, ad::matmul(x, params.w_dst));
  return ad::add(ad::add(self_term, ad::sub(src, dst)), ad::broadcast_rows(params.bias, n));
}

int pooled_size(int n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError(fmt::format("pool ratio {} outside (0, 1]", ratio));
  if (n < 1) throw ValidationError("pooled_size: empty graph");
  // The epsilon keeps products such as 0.7 * 10 from rounding up to 8.
  const int k = static_cast<int>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  return std::clamp(k, 1, n);
}

std::vector<int> topk_select(std::span<const double> scores, double ratio) {
  const int n = static_cast<int>(scores.size());
  const int k = pooled_size(n, ratio);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

PoolResult graph_pool(const ad::Var& x, const Topology& topology, double ratio, const LeConvParams& params,
                      bool augment_connectivity) {
  PoolResult result;
  result.scores = leconv_score(x, topology, params);
  const Eigen::VectorXd y = result.scores.value().col(0);
  result.idx = topk_select(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), ratio);
  const ad::Var gated = ad::mul(x, ad::broadcast_cols(ad::tanh(result.scores), x.cols()));
  result.pooled_features = ad::gather_rows(gated, result.idx);
  result.pooled = augment_connectivity ? topology.restrict_augmented(result.idx) : topology.restrict_to(result.idx);
  return result;
}

ad::Var graph_unpool(const ad::Var& x_small, std::span<const int> idx, Eigen::Index original_size) {
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= original_size) {
      throw ValidationError(fmt::format("graph_unpool: index {} outside [0, {})", idx[t], original_size));
    }
    if (t > 0 && idx[t] <= idx[t - 1]) throw ValidationError("graph_unpool: idx must be strictly increasing");
  }
  return ad::scatter_rows(x_small, std::vector<int>(idx.begin(), idx.end()), original_size);
}

MixerParams MixerParams::init(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, double leaky_slope,
                              SplitRng& rng) {
  MixerParams p;
  p.w1 = glorot(in, hidden, rng);
  p.b1 = zero_parameter(1, hidden);
  p.w2 = glorot(hidden, out, rng);
  p.b2 = zero_parameter(1, out);
  p.leaky_slope = leaky_slope;
  return p;
}

void MixerParams::register_into(ParameterSet& set, const std::string& prefix) const {
  set.add(prefix + ".w1", w1);
  set.add(prefix + ".b1", b1);
  set.add(prefix + ".w2", w2);
  set.add(prefix + ".b2", b2);
}

ad::Var linear(const ad::Var& x, const ad::Var& weight, const ad::Var& bias) {
  return ad::add(ad::matmul(x, weight), ad::broadcast_rows(bias, x.rows()));
}

ad::Var feature_mix_forward(const ad::Var& x, const MixerParams& params) {
  if (x.cols() != params.in_dim()) {
    throw ValidationError(
        fmt::format("feature_mix_forward: input width {} but mixer expects {}", x.cols(), params.in_dim()));
  }
  const ad::Var hidden = ad::leaky_relu(linear(x, params.w1, params.b1), params.leaky_slope);
  return linear(hidden, params.w2, params.b2);
}

ad::Var mask_rows(const ad::Var& x, const Vector& row_weights) {
  if (row_weights.size() != x.rows()) throw ValidationError("mask_rows: length mismatch");
  Matrix m = row_weights.replicate(1, x.cols());
  return ad::mul(x, ad::constant(std::move(m)));
}

ad::Var node_mix_resize(const ad::Var& x, const MixerParams& params, const Vector* in_valid,
                        const Vector* out_valid) {
  if (x.rows() != params.in_dim()) {
    throw ValidationError(
        fmt::format("node_mix: {} node rows but mixer expects {}", x.rows(), params.in_dim()));
  }
  const ad::Var input = in_valid ? mask_rows(x, *in_valid) : x;
  ad::Var mixed = ad::transpose(feature_mix_forward(ad::transpose(input), params));
  return out_valid ? mask_rows(mixed, *out_valid) : mixed;
}

ad::Var node_mix_forward(const ad::Var& x_pad, const Vector& node_valid, const MixerParams& params) {
  if (params.in_dim() != params.out_dim()) {
    throw ValidationError("node_mix_forward: mixer must preserve the node dimension");
  }
  if (node_valid.size() != x_pad.rows()) throw ValidationError("node_mix_forward: validity length mismatch");
  return node_mix_resize(x_pad, params, &node_valid, &node_valid);
}

ad::Var pad_rows(const ad::Var& x, Eigen::Index total_rows) {
  if (total_rows < x.rows()) throw ValidationError("pad_rows: target smaller than input");
  if (total_rows == x.rows()) return x;
  std::vector<int> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  return ad::scatter_rows(x, std::move(idx), total_rows);
}

ad::Var take_rows(const ad::Var& x, Eigen::Index n) {
  if (n > x.rows()) throw ValidationError("take_rows: not enough rows");
  if (n == x.rows()) return x;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return ad::gather_rows(x, std::move(idx));
}

Vector validity(Eigen::Index valid, Eigen::Index total) {
  Vector v = Vector::Zero(total);
  v.head(std::min(valid, total)).setOnes();
  return v;
}

}  // namespace dpgan
