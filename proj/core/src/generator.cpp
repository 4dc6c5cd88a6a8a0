#include "dpgan/generator.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dpgan {

std::string_view to_string(SkipMerge m) {
  switch (m) {
    case SkipMerge::Concat: return "concat";
    case SkipMerge::Add: return "add";
    case SkipMerge::None: return "none";
  }
  return "?";
}

std::string_view to_string(GeneratorPath p) {
  switch (p) {
    case GeneratorPath::Dual: return "dual";
    case GeneratorPath::GraphOnly: return "graph";
    case GeneratorPath::MlpOnly: return "mlp";
  }
  return "?";
}

SkipMerge parse_skip_merge(std::string_view s) {
  if (s == "concat") return SkipMerge::Concat;
  if (s == "add") return SkipMerge::Add;
  if (s == "none") return SkipMerge::None;
  throw ValidationError(fmt::format("unknown skip merge '{}'", s));
}

GeneratorPath parse_generator_path(std::string_view s) {
  if (s == "dual") return GeneratorPath::Dual;
  if (s == "graph") return GeneratorPath::GraphOnly;
  if (s == "mlp") return GeneratorPath::MlpOnly;
  throw ValidationError(fmt::format("unknown generator path '{}'", s));
}

void GeneratorConfig::validate() const {
  if (feature_dim < 1) throw ValidationError("generator: feature_dim must be positive");
  if (node_capacity < 1) throw ValidationError("generator: node_capacity must be positive");
  if (graph.depth < 1 || mlp.depth < 1) throw ValidationError("generator: depth must be >= 1");
  if (!(graph.pool_ratio > 0.0 && graph.pool_ratio <= 1.0)) {
    throw ValidationError("generator: pool_ratio must be in (0, 1]");
  }
  if (graph.hidden_dim < 1 || mlp.hidden_dim < 1) throw ValidationError("generator: hidden_dim must be positive");
  if (mlp.node_bottleneck < 0) throw ValidationError("generator: node_bottleneck must be >= 1 (or 0 for default)");
}

std::vector<int> level_capacities(int node_capacity, int depth, double ratio) {
  std::vector<int> caps{node_capacity};
  for (int l = 0; l < depth; ++l) caps.push_back(pooled_size(caps.back(), ratio));
  return caps;
}

std::vector<int> mlp_capacities(int node_capacity, int depth, int node_bottleneck) {
  std::vector<int> caps{node_capacity};
  int next = node_bottleneck > 0 ? node_bottleneck : (node_capacity + 1) / 2;
  for (int l = 0; l < depth; ++l) {
    caps.push_back(std::max(next, 1));
    next = (caps.back() + 1) / 2;
  }
  return caps;
}

GraphUnetPPParams GraphUnetPPParams::init(const GraphUnetPPConfig& cfg, int feature_dim, int node_capacity,
                                          SplitRng& rng) {
  GraphUnetPPParams p;
  const int h = cfg.hidden_dim;
  const auto caps = level_capacities(node_capacity, cfg.depth, cfg.pool_ratio);
  for (int l = 0; l <= cfg.depth; ++l) {
    p.enc_gcn.push_back(GcnParams::init(l == 0 ? 2 * feature_dim : h, h, rng));
    if (cfg.node_mix) {
      const int c = caps[static_cast<std::size_t>(l)];
      p.enc_mix.push_back(MixerParams::init(c, c, c, cfg.leaky_slope, rng));
    }
  }
  for (int l = 0; l < cfg.depth; ++l) {
    p.pool.push_back(LeConvParams::init(h, rng));
    if (cfg.skip_merge == SkipMerge::Concat) {
      p.merge_weight.push_back(glorot(2 * h, h, rng));
      p.merge_bias.push_back(zero_parameter(1, h));
    }
    p.dec_gcn.push_back(GcnParams::init(h, h, rng));
    if (cfg.node_mix && !cfg.share_node_mix_across_depth) {
      const int c = caps[static_cast<std::size_t>(l)];
      p.dec_mix.push_back(MixerParams::init(c, c, c, cfg.leaky_slope, rng));
    }
  }
  p.head_weight = glorot(h, feature_dim, rng);
  p.head_bias = zero_parameter(1, feature_dim);
  return p;
}

void GraphUnetPPParams::register_into(ParameterSet& set, const GraphUnetPPConfig& cfg) const {
  (void)cfg;
  for (std::size_t l = 0; l < enc_gcn.size(); ++l) {
    enc_gcn[l].register_into(set, fmt::format("graph.enc{}.gcn", l));
  }
  for (std::size_t l = 0; l < enc_mix.size(); ++l) {
    enc_mix[l].register_into(set, fmt::format("graph.enc{}.node_mix", l));
  }
  for (std::size_t l = 0; l < pool.size(); ++l) pool[l].register_into(set, fmt::format("graph.pool{}", l));
  for (std::size_t l = 0; l < merge_weight.size(); ++l) {
    set.add(fmt::format("graph.dec{}.merge.weight", l), merge_weight[l]);
    set.add(fmt::format("graph.dec{}.merge.bias", l), merge_bias[l]);
  }
  for (std::size_t l = 0; l < dec_gcn.size(); ++l) {
    dec_gcn[l].register_into(set, fmt::format("graph.dec{}.gcn", l));
  }
  for (std::size_t l = 0; l < dec_mix.size(); ++l) {
    dec_mix[l].register_into(set, fmt::format("graph.dec{}.node_mix", l));
  }
  set.add("graph.head.weight", head_weight);
  set.add("graph.head.bias", head_bias);
}

MLPUnetPPParams MLPUnetPPParams::init(const MLPUnetPPConfig& cfg, int feature_dim, int node_capacity,
                                      SplitRng& rng) {
  MLPUnetPPParams p;
  const int h = cfg.hidden_dim;
  const auto caps = mlp_capacities(node_capacity, cfg.depth, cfg.node_bottleneck);
  p.in_mix = MixerParams::init(2 * feature_dim, h, h, cfg.leaky_slope, rng);
  for (int l = 1; l <= cfg.depth; ++l) {
    const int wide = caps[static_cast<std::size_t>(l - 1)];
    const int narrow = caps[static_cast<std::size_t>(l)];
    p.enc_feat.push_back(MixerParams::init(h, h, h, cfg.leaky_slope, rng));
    p.enc_node.push_back(MixerParams::init(wide, narrow, narrow, cfg.leaky_slope, rng));
    p.dec_node.push_back(MixerParams::init(narrow, narrow, wide, cfg.leaky_slope, rng));
    p.dec_feat.push_back(MixerParams::init(h, h, h, cfg.leaky_slope, rng));
  }
  p.head_weight = glorot(h, feature_dim, rng);
  p.head_bias = zero_parameter(1, feature_dim);
  return p;
}

void MLPUnetPPParams::register_into(ParameterSet& set) const {
  in_mix.register_into(set, "mlp.in.feature_mix");
  for (std::size_t l = 0; l < enc_feat.size(); ++l) {
    enc_feat[l].register_into(set, fmt::format("mlp.enc{}.feature_mix", l + 1));
    enc_node[l].register_into(set, fmt::format("mlp.enc{}.node_mix", l + 1));
    dec_node[l].register_into(set, fmt::format("mlp.dec{}.node_mix", l + 1));
    dec_feat[l].register_into(set, fmt::format("mlp.dec{}.feature_mix", l + 1));
  }
  set.add("mlp.head.weight", head_weight);
  set.add("mlp.head.bias", head_bias);
}

namespace {

ad::Var gcn_block(const ad::Var& h, const Topology& topo, const GcnParams& gcn, const MixerParams* mix,
                  int capacity, double slope) {
  ad::Var z = ad::leaky_relu(gcn_forward(h, topo, gcn), slope);
  if (mix != nullptr) {
    const Eigen::Index n = z.rows();
    if (n > capacity) {
      throw ValidationError(fmt::format("graph with {} nodes exceeds node-mix capacity {}", n, capacity));
    }
    const ad::Var mixed = node_mix_forward(pad_rows(z, capacity), validity(n, capacity), *mix);
    z = ad::add(z, take_rows(mixed, n));
  }
  return z;
}

}  // namespace

ad::Var graphunetpp_forward(const ad::Var& x_in, const Topology& topology, const GraphUnetPPParams& params,
                            const GraphUnetPPConfig& cfg, int node_capacity) {
  if (x_in.rows() != topology.num_nodes()) throw ValidationError("graphunetpp_forward: shape mismatch");
  const auto caps = level_capacities(node_capacity, cfg.depth, cfg.pool_ratio);
  const auto mixer = [&](const std::vector<MixerParams>& v, int l) -> const MixerParams* {
    return cfg.node_mix ? &v[static_cast<std::size_t>(l)] : nullptr;
  };

  std::vector<Topology> topos;
  topos.reserve(static_cast<std::size_t>(cfg.depth) + 1);
  topos.push_back(topology);
  std::vector<ad::Var> skips;
  std::vector<std::vector<int>> indices;

  ad::Var h = gcn_block(x_in, topos[0], params.enc_gcn[0], mixer(params.enc_mix, 0), caps[0], cfg.leaky_slope);
  for (int l = 0; l < cfg.depth; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    skips.push_back(h);
    PoolResult pooled = graph_pool(h, topos[ul], cfg.pool_ratio, params.pool[ul], cfg.augment_connectivity);
    indices.push_back(std::move(pooled.idx));
    topos.push_back(std::move(pooled.pooled));
    h = gcn_block(pooled.pooled_features, topos[ul + 1], params.enc_gcn[ul + 1], mixer(params.enc_mix, l + 1),
                  caps[ul + 1], cfg.leaky_slope);
  }
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    ad::Var u = graph_unpool(h, indices[ul], topos[ul].num_nodes());
    switch (cfg.skip_merge) {
      case SkipMerge::Concat:
        u = linear(ad::concat_cols(u, skips[ul]), params.merge_weight[ul], params.merge_bias[ul]);
        break;
      case SkipMerge::Add:
        u = ad::add(u, skips[ul]);
        break;
      case SkipMerge::None:
        break;
    }
    const MixerParams* mix = cfg.share_node_mix_across_depth ? mixer(params.enc_mix, l) : mixer(params.dec_mix, l);
    h = gcn_block(u, topos[ul], params.dec_gcn[ul], mix, caps[ul], cfg.leaky_slope);
  }
  return linear(h, params.head_weight, params.head_bias);
}

ad::Var mlpunetpp_forward(const ad::Var& x_in, const Vector& node_valid, const MLPUnetPPParams& params,
                          const MLPUnetPPConfig& cfg) {
  if (x_in.rows() != node_valid.size()) throw ValidationError("mlpunetpp_forward: validity length mismatch");
  if (x_in.cols() != params.in_mix.in_dim()) {
    throw ValidationError("mlpunetpp_forward: input width mismatch");
  }
  const int depth = cfg.depth;
  std::vector<ad::Var> encoded;
  ad::Var h = mask_rows(feature_mix_forward(mask_rows(x_in, node_valid), params.in_mix), node_valid);
  encoded.push_back(h);
  for (int l = 1; l <= depth; ++l) {
    const auto ul = static_cast<std::size_t>(l - 1);
    ad::Var f = feature_mix_forward(h, params.enc_feat[ul]);
    const Vector* in_valid = l == 1 ? &node_valid : nullptr;
    h = node_mix_resize(f, params.enc_node[ul], in_valid, nullptr);
    encoded.push_back(h);
  }
  ad::Var d = h;
  for (int l = depth; l >= 1; --l) {
    const auto ul = static_cast<std::size_t>(l - 1);
    const Vector* out_valid = l == 1 ? &node_valid : nullptr;
    ad::Var u = node_mix_resize(d, params.dec_node[ul], nullptr, out_valid);
    u = feature_mix_forward(u, params.dec_feat[ul]);
    if (out_valid != nullptr) u = mask_rows(u, node_valid);
    if (cfg.skip) u = ad::add(u, encoded[ul]);
    d = u;
  }
  return mask_rows(linear(d, params.head_weight, params.head_bias), node_valid);
}

Matrix generator_input(const Matrix& x, const MaskMatrix& r) {
  Matrix out(x.rows(), 2 * x.cols());
  out << apply_mask(x, r), r.entries();
  return out;
}

Matrix compose_imputation(const Matrix& x, const MaskMatrix& r, const Matrix& x_tilde) {
  if (x.rows() != r.rows() || x.cols() != r.cols() || x_tilde.rows() != x.rows() || x_tilde.cols() != x.cols()) {
    throw ValidationError("compose_imputation: shape mismatch");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.data()[i] = r.entries().data()[i] != 0.0 ? x.data()[i] : x_tilde.data()[i];
  }
  return out;
}

ad::Var compose_imputation(const Matrix& x, const MaskMatrix& r, const ad::Var& x_tilde) {
  if (x.rows() != r.rows() || x.cols() != r.cols() || x_tilde.rows() != x.rows() || x_tilde.cols() != x.cols()) {
    throw ValidationError("compose_imputation: shape mismatch");
  }
  const Matrix keep = r.entries();
  const Matrix fill = Matrix::Ones(r.rows(), r.cols()) - keep;
  return ad::add(ad::constant(x.cwiseProduct(keep)), ad::mul(x_tilde, ad::constant(fill)));
}

Generator::Generator(GeneratorConfig config, SplitRng rng) : config_(std::move(config)) {
  config_.validate();
  SplitRng graph_rng = rng.split("graph");
  SplitRng mlp_rng = rng.split("mlp");
  const bool use_graph = config_.path != GeneratorPath::MlpOnly;
  const bool use_mlp = config_.path != GeneratorPath::GraphOnly;
  if (use_graph) {
    graph_ = GraphUnetPPParams::init(config_.graph, config_.feature_dim, config_.node_capacity, graph_rng);
    graph_.register_into(params_, config_.graph);
  }
  if (use_mlp) {
    mlp_ = MLPUnetPPParams::init(config_.mlp, config_.feature_dim, config_.node_capacity, mlp_rng);
    mlp_.register_into(params_);
  }
  const double a0 = config_.path == GeneratorPath::Dual       ? config_.alpha_init
                    : config_.path == GeneratorPath::MlpOnly ? 1.0
                                                             : 0.0;
  alpha_ = ad::parameter(Matrix::Constant(1, 1, a0));
  if (config_.path == GeneratorPath::Dual && config_.learn_alpha) params_.add("alpha", alpha_);
}

double Generator::alpha() const { return std::clamp(alpha_.value()(0, 0), 0.0, 1.0); }

ad::Var Generator::graph_path(const ad::Var& x_in, const Topology& topology) const {
  return graphunetpp_forward(x_in, topology, graph_, config_.graph, config_.node_capacity);
}

ad::Var Generator::mlp_path(const ad::Var& x_in) const {
  const Eigen::Index n = x_in.rows();
  const Eigen::Index cap = config_.node_capacity;
  if (n > cap) throw ValidationError(fmt::format("graph with {} nodes exceeds MLP path capacity {}", n, cap));
  const ad::Var out = mlpunetpp_forward(pad_rows(x_in, cap), validity(n, cap), mlp_, config_.mlp);
  return take_rows(out, n);
}

ad::Var Generator::forward(const Matrix& x, const MaskMatrix& r, const Topology& topology) const {
  if (x.cols() != config_.feature_dim) {
    throw ValidationError(fmt::format("generator: input has {} features, model expects {}", x.cols(),
                                      config_.feature_dim));
  }
  if (x.rows() != topology.num_nodes()) throw ValidationError("generator: feature rows != node count");
  const ad::Var x_in = ad::constant(generator_input(x, r));
  switch (config_.path) {
    case GeneratorPath::GraphOnly: return graph_path(x_in, topology);
    case GeneratorPath::MlpOnly: return mlp_path(x_in);
    case GeneratorPath::Dual: break;
  }
  const ad::Var a = ad::clamp(alpha_, 0.0, 1.0);
  const ad::Var one_minus_a = ad::add_scalar(ad::scale(a, -1.0), 1.0);
  const ad::Var m = mlp_path(x_in);
  const ad::Var g = graph_path(x_in, topology);
  return ad::add(ad::mul(ad::expand(a, m.rows(), m.cols()), m),
                 ad::mul(ad::expand(one_minus_a, g.rows(), g.cols()), g));
}

}  // namespace dpgan
