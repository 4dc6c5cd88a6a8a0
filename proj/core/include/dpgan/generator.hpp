#pragma once

#include "dpgan/autodiff.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/layers.hpp"
#include "dpgan/params.hpp"
#include "dpgan/rng.hpp"

#include <string_view>
#include <vector>

namespace dpgan {

enum class SkipMerge { Concat, Add, None };
enum class GeneratorPath { Dual, GraphOnly, MlpOnly };

std::string_view to_string(SkipMerge m);
std::string_view to_string(GeneratorPath p);
SkipMerge parse_skip_merge(std::string_view s);
GeneratorPath parse_generator_path(std::string_view s);

struct GraphUnetPPConfig {
  int depth = 2;           // number of pool levels
  int hidden_dim = 128;
  double pool_ratio = 0.5;
  double leaky_slope = 0.2;
  bool node_mix = true;
  bool share_node_mix_across_depth = false;  // decoder reuses the encoder mixer of the same level
  SkipMerge skip_merge = SkipMerge::Concat;
  bool augment_connectivity = false;
};

struct MLPUnetPPConfig {
  int depth = 2;
  int hidden_dim = 128;
  int node_bottleneck = 0;  // 0: ceil(N_max / 2); halved again per deeper level
  bool skip = true;
  double leaky_slope = 0.2;
};

struct GeneratorConfig {
  int feature_dim = 0;    // D
  int node_capacity = 0;  // N_max
  GeneratorPath path = GeneratorPath::Dual;
  GraphUnetPPConfig graph;
  MLPUnetPPConfig mlp;
  double alpha_init = 0.5;
  bool learn_alpha = true;

  void validate() const;
};

/// Per-level node counts ceil(N_max * ratio^l) for l = 0..depth.
std::vector<int> level_capacities(int node_capacity, int depth, double ratio);
/// Node counts of the MLP path, N_max followed by the bottleneck chain.
std::vector<int> mlp_capacities(int node_capacity, int depth, int node_bottleneck);

struct GraphUnetPPParams {
  std::vector<GcnParams> enc_gcn;      // depth + 1 (last is the bottom block)
  std::vector<MixerParams> enc_mix;    // depth + 1
  std::vector<LeConvParams> pool;      // depth
  std::vector<ad::Var> merge_weight;   // depth (Concat only): 2H x H
  std::vector<ad::Var> merge_bias;     // depth
  std::vector<GcnParams> dec_gcn;      // depth
  std::vector<MixerParams> dec_mix;    // depth (empty when shared)
  ad::Var head_weight;                 // H x D
  ad::Var head_bias;                   // 1 x D

  static GraphUnetPPParams init(const GraphUnetPPConfig& cfg, int feature_dim, int node_capacity, SplitRng& rng);
  void register_into(ParameterSet& set, const GraphUnetPPConfig& cfg) const;
};

struct MLPUnetPPParams {
  MixerParams in_mix;                 // 2D -> H -> H (feature axis)
  std::vector<MixerParams> enc_feat;  // depth
  std::vector<MixerParams> enc_node;  // depth: cap[l-1] -> cap[l]
  std::vector<MixerParams> dec_node;  // depth: cap[l] -> cap[l-1]
  std::vector<MixerParams> dec_feat;  // depth
  ad::Var head_weight;                // H x D
  ad::Var head_bias;

  static MLPUnetPPParams init(const MLPUnetPPConfig& cfg, int feature_dim, int node_capacity, SplitRng& rng);
  void register_into(ParameterSet& set) const;
};

/// Graph path: per level GCN -> node-mix -> pool on the way down, unpool ->
/// skip merge -> GCN -> node-mix on the way up, then a linear head.
ad::Var graphunetpp_forward(const ad::Var& x_in, const Topology& topology, const GraphUnetPPParams& params,
                            const GraphUnetPPConfig& cfg, int node_capacity);

/// MLP path on a padded N_max x 2D input; rows with node_valid == 0 are
/// zero on output.
ad::Var mlpunetpp_forward(const ad::Var& x_in, const Vector& node_valid, const MLPUnetPPParams& params,
                          const MLPUnetPPConfig& cfg);

/// Generator input: masked features concatenated with the mask (N x 2D).
Matrix generator_input(const Matrix& x, const MaskMatrix& r);

/// r * x + (1 - r) * x_tilde.
Matrix compose_imputation(const Matrix& x, const MaskMatrix& r, const Matrix& x_tilde);
ad::Var compose_imputation(const Matrix& x, const MaskMatrix& r, const ad::Var& x_tilde);

/// Dual-path generator: clamp(alpha) * MLP path + (1 - clamp(alpha)) * graph path.
class Generator {
 public:
  Generator(GeneratorConfig config, SplitRng rng);

  const GeneratorConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  ad::Var forward(const Matrix& x, const MaskMatrix& r, const Topology& topology) const;
  ad::Var graph_path(const ad::Var& x_in, const Topology& topology) const;
  /// Pads to N_max internally; returns N x D.
  ad::Var mlp_path(const ad::Var& x_in) const;

  /// Weight of the MLP path after clamping to [0, 1].
  double alpha() const;
  ad::Var alpha_raw() const { return alpha_; }
  void set_alpha(double raw) { alpha_.mutable_value()(0, 0) = raw; }

  GraphUnetPPParams& graph_params() { return graph_; }
  MLPUnetPPParams& mlp_params() { return mlp_; }

 private:
  GeneratorConfig config_;
  GraphUnetPPParams graph_;
  MLPUnetPPParams mlp_;
  ad::Var alpha_;
  ParameterSet params_;
};

}  // namespace dpgan
