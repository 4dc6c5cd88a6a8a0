#pragma once

#include "dpgan/autodiff.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/layers.hpp"
#include "dpgan/params.hpp"

#include <string_view>
#include <vector>

namespace dpgan {

enum class DiscMode { Subgraph, Graph };

std::string_view to_string(DiscMode m);
DiscMode parse_disc_mode(std::string_view s);

struct DiscriminatorConfig {
  int input_dim = 0;      // D, or 2D when the critic also sees the mask
  int node_capacity = 0;  // N_max for node-mix padding
  int hops = 2;           // number of pooling layers
  int hidden_dim = 128;
  DiscMode mode = DiscMode::Subgraph;
  bool node_mix = true;
  double leaky_slope = 0.2;
  double pool_ratio = 0.5;

  /// Rejects configurations the critic cannot be built for (e.g. graph mode
  /// without exactly two pooling layers).
  void validate() const;
};

/// Number of scores a subgraph critic emits for an N-node graph.
int subgraph_score_count(int num_nodes, int hops, double ratio = 0.5);

/// Hop-configurable critic. `hops` blocks of GCN -> node-mix -> pool, then a
/// final GCN -> node-mix embedding and a per-node linear score head. With
/// hops == 0 every original node gets a score.
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig config, SplitRng rng);

  const DiscriminatorConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Per-subgraph fidelity scores, ceil(N * 0.5^hops) x 1.
  ad::Var subgraph_scores(const ad::Var& x, const Topology& topology) const;
  /// Mean of the subgraph scores through a scalar fully connected layer.
  ad::Var graph_score(const ad::Var& x, const Topology& topology) const;
  /// Dispatches on mode: subgraph scores, or the 1x1 graph score.
  ad::Var forward(const ad::Var& x, const Topology& topology) const;

  std::vector<GcnParams>& gcn() { return gcn_; }
  std::vector<MixerParams>& mixers() { return mix_; }
  ad::Var& head_weight() { return head_weight_; }
  ad::Var& head_bias() { return head_bias_; }
  ad::Var& fc_weight() { return fc_weight_; }
  ad::Var& fc_bias() { return fc_bias_; }

 private:
  DiscriminatorConfig config_;
  std::vector<GcnParams> gcn_;     // hops + 1
  std::vector<MixerParams> mix_;   // hops + 1 when node_mix
  std::vector<LeConvParams> pool_; // hops
  ad::Var head_weight_;            // H x 1
  ad::Var head_bias_;              // 1 x 1
  ad::Var fc_weight_;              // 1 x 1 (graph mode)
  ad::Var fc_bias_;                // 1 x 1 (graph mode)
  ParameterSet params_;
};

/// Arithmetic mean of a score vector as a 1x1 value.
ad::Var critic_value(const ad::Var& scores);

}  // namespace dpgan
