#include "dpgan/discriminator.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/generator.hpp"

#include <fmt/format.h>

namespace dpgan {

std::string_view to_string(DiscMode m) { return m == DiscMode::Graph ? "graph" : "subgraph"; }

DiscMode parse_disc_mode(std::string_view s) {
  if (s == "subgraph") return DiscMode::Subgraph;
  if (s == "graph") return DiscMode::Graph;
  throw ValidationError(fmt::format("unknown discriminator mode '{}'", s));
}

void DiscriminatorConfig::validate() const {
  if (input_dim < 1) throw ValidationError("discriminator: input_dim must be positive");
  if (node_capacity < 1) throw ValidationError("discriminator: node_capacity must be positive");
  if (hops < 0) throw ValidationError("discriminator: hops must be >= 0");
  if (hidden_dim < 1) throw ValidationError("discriminator: hidden_dim must be positive");
  if (mode == DiscMode::Graph && hops != 2) {
    throw ValidationError("discriminator: graph mode is built on the 2-hop subgraph critic (hops must be 2)");
  }
  if (!(pool_ratio > 0.0 && pool_ratio <= 1.0)) throw ValidationError("discriminator: pool_ratio outside (0, 1]");
}

int subgraph_score_count(int num_nodes, int hops, double ratio) {
  int n = num_nodes;
  for (int h = 0; h < hops; ++h) n = pooled_size(n, ratio);
  return n;
}

Discriminator::Discriminator(DiscriminatorConfig config, SplitRng rng) : config_(config) {
  config_.validate();
  const int h = config_.hidden_dim;
  const auto caps = level_capacities(config_.node_capacity, config_.hops, config_.pool_ratio);
  for (int l = 0; l <= config_.hops; ++l) {
    gcn_.push_back(GcnParams::init(l == 0 ? config_.input_dim : h, h, rng));
    gcn_.back().register_into(params_, fmt::format("critic.block{}.gcn", l));
    if (config_.node_mix) {
      const int c = caps[static_cast<std::size_t>(l)];
      mix_.push_back(MixerParams::init(c, c, c, config_.leaky_slope, rng));
      mix_.back().register_into(params_, fmt::format("critic.block{}.node_mix", l));
    }
    if (l < config_.hops) {
      pool_.push_back(LeConvParams::init(h, rng));
      pool_.back().register_into(params_, fmt::format("critic.pool{}", l));
    }
  }
  head_weight_ = glorot(h, 1, rng);
  head_bias_ = zero_parameter(1, 1);
  params_.add("critic.head.weight", head_weight_);
  params_.add("critic.head.bias", head_bias_);
  if (config_.mode == DiscMode::Graph) {
    fc_weight_ = ad::parameter(Matrix::Ones(1, 1));
    fc_bias_ = zero_parameter(1, 1);
    params_.add("critic.fc.weight", fc_weight_);
    params_.add("critic.fc.bias", fc_bias_);
  }
}

ad::Var Discriminator::subgraph_scores(const ad::Var& x, const Topology& topology) const {
  if (x.cols() != config_.input_dim) {
    throw ValidationError(
        fmt::format("discriminator: input has {} columns, expected {}", x.cols(), config_.input_dim));
  }
  if (x.rows() != topology.num_nodes()) throw ValidationError("discriminator: feature rows != node count");
  const auto caps = level_capacities(config_.node_capacity, config_.hops, config_.pool_ratio);
  const auto block = [&](const ad::Var& in, const Topology& topo, int l) {
    ad::Var z = ad::leaky_relu(gcn_forward(in, topo, gcn_[static_cast<std::size_t>(l)]), config_.leaky_slope);
    if (config_.node_mix) {
      const int cap = caps[static_cast<std::size_t>(l)];
      const Eigen::Index n = z.rows();
      if (n > cap) throw ValidationError(fmt::format("graph with {} nodes exceeds critic capacity {}", n, cap));
      const ad::Var mixed = node_mix_forward(pad_rows(z, cap), validity(n, cap), mix_[static_cast<std::size_t>(l)]);
      z = ad::add(z, take_rows(mixed, n));
    }
    return z;
  };

  Topology current = topology;
  ad::Var h = x;
  for (int l = 0; l < config_.hops; ++l) {
    h = block(h, current, l);
    PoolResult pooled = graph_pool(h, current, config_.pool_ratio, pool_[static_cast<std::size_t>(l)]);
    h = pooled.pooled_features;
    current = std::move(pooled.pooled);
  }
  h = block(h, current, config_.hops);
  return linear(h, head_weight_, head_bias_);
}

ad::Var Discriminator::graph_score(const ad::Var& x, const Topology& topology) const {
  if (config_.mode != DiscMode::Graph) throw ValidationError("graph_score requires graph mode");
  const ad::Var pooled = ad::mean(subgraph_scores(x, topology));
  return ad::add(ad::mul(pooled, fc_weight_), fc_bias_);
}

ad::Var Discriminator::forward(const ad::Var& x, const Topology& topology) const {
  return config_.mode == DiscMode::Graph ? graph_score(x, topology) : subgraph_scores(x, topology);
}

ad::Var critic_value(const ad::Var& scores) {
  if (!scores.defined() || scores.value().size() == 0) throw ValidationError("critic_value: empty score vector");
  return ad::mean(scores);
}

}  // namespace dpgan
