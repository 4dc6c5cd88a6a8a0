#include "dpgan/serialization.hpp"

#include "dpgan/errors.hpp"

namespace dpgan {
namespace {

using nlohmann::json;

/// Reads `key` into `out` when present; missing keys keep the default.
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }
}

template <typename Enum, typename Parse>
void read_enum(const json& j, const char* key, Enum& out, Parse parse) {
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_string()) throw ConfigError(key, "expected a string");
    try {
      out = parse(it->get<std::string>());
    } catch (const ValidationError& e) {
      throw ConfigError(key, e.what());
    }
  }
}

}  // namespace

void to_json(json& j, const GraphUnetPPConfig& c) {
  j = json{{"depth", c.depth},
           {"hidden_dim", c.hidden_dim},
           {"pool_ratio", c.pool_ratio},
           {"leaky_slope", c.leaky_slope},
           {"node_mix", c.node_mix},
           {"share_node_mix_across_depth", c.share_node_mix_across_depth},
           {"skip_merge", std::string(to_string(c.skip_merge))},
           {"augment_connectivity", c.augment_connectivity}};
}

void from_json(const json& j, GraphUnetPPConfig& c) {
  read_opt(j, "depth", c.depth);
  read_opt(j, "hidden_dim", c.hidden_dim);
  read_opt(j, "pool_ratio", c.pool_ratio);
  read_opt(j, "leaky_slope", c.leaky_slope);
  read_opt(j, "node_mix", c.node_mix);
  read_opt(j, "share_node_mix_across_depth", c.share_node_mix_across_depth);
  read_enum(j, "skip_merge", c.skip_merge, parse_skip_merge);
  read_opt(j, "augment_connectivity", c.augment_connectivity);
}

void to_json(json& j, const MLPUnetPPConfig& c) {
  j = json{{"depth", c.depth},
           {"hidden_dim", c.hidden_dim},
           {"node_bottleneck", c.node_bottleneck},
           {"skip", c.skip},
           {"leaky_slope", c.leaky_slope}};
}

void from_json(const json& j, MLPUnetPPConfig& c) {
  read_opt(j, "depth", c.depth);
  read_opt(j, "hidden_dim", c.hidden_dim);
  read_opt(j, "node_bottleneck", c.node_bottleneck);
  read_opt(j, "skip", c.skip);
  read_opt(j, "leaky_slope", c.leaky_slope);
}

void to_json(json& j, const GeneratorConfig& c) {
  j = json{{"feature_dim", c.feature_dim},
           {"node_capacity", c.node_capacity},
           {"path", std::string(to_string(c.path))},
           {"graph", c.graph},
           {"mlp", c.mlp},
           {"alpha_init", c.alpha_init},
           {"learn_alpha", c.learn_alpha}};
}

void from_json(const json& j, GeneratorConfig& c) {
  read_opt(j, "feature_dim", c.feature_dim);
  read_opt(j, "node_capacity", c.node_capacity);
  read_enum(j, "path", c.path, parse_generator_path);
  if (j.contains("graph")) from_json(j.at("graph"), c.graph);
  if (j.contains("mlp")) from_json(j.at("mlp"), c.mlp);
  read_opt(j, "alpha_init", c.alpha_init);
  read_opt(j, "learn_alpha", c.learn_alpha);
}

void to_json(json& j, const DiscriminatorConfig& c) {
  j = json{{"input_dim", c.input_dim},
           {"node_capacity", c.node_capacity},
           {"hops", c.hops},
           {"hidden_dim", c.hidden_dim},
           {"mode", std::string(to_string(c.mode))},
           {"node_mix", c.node_mix},
           {"leaky_slope", c.leaky_slope},
           {"pool_ratio", c.pool_ratio}};
}

void from_json(const json& j, DiscriminatorConfig& c) {
  read_opt(j, "input_dim", c.input_dim);
  read_opt(j, "node_capacity", c.node_capacity);
  read_opt(j, "hops", c.hops);
  read_opt(j, "hidden_dim", c.hidden_dim);
  read_enum(j, "mode", c.mode, parse_disc_mode);
  read_opt(j, "node_mix", c.node_mix);
  read_opt(j, "leaky_slope", c.leaky_slope);
  read_opt(j, "pool_ratio", c.pool_ratio);
}

void to_json(json& j, const LossConfig& c) {
  j = json{{"lambda_r", c.lambda_r},
           {"lambda_gp", c.lambda_gp},
           {"recon_norm", std::string(to_string(c.recon_norm))},
           {"adversarial", c.adversarial}};
}

void from_json(const json& j, LossConfig& c) {
  read_opt(j, "lambda_r", c.lambda_r);
  read_opt(j, "lambda_gp", c.lambda_gp);
  read_enum(j, "recon_norm", c.recon_norm, parse_recon_norm);
  read_opt(j, "adversarial", c.adversarial);
}

void to_json(json& j, const TTURConfig& c) {
  j = json{{"lr_d", c.lr_d},
           {"lr_g", c.lr_g},
           {"optimizer", std::string(to_string(c.optimizer))},
           {"d_steps_per_g", c.d_steps_per_g},
           {"beta1", c.beta1},
           {"beta2", c.beta2}};
}

void from_json(const json& j, TTURConfig& c) {
  read_opt(j, "lr_d", c.lr_d);
  read_opt(j, "lr_g", c.lr_g);
  read_enum(j, "optimizer", c.optimizer, parse_optimizer);
  read_opt(j, "d_steps_per_g", c.d_steps_per_g);
  read_opt(j, "beta1", c.beta1);
  read_opt(j, "beta2", c.beta2);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"loss", c.loss},
           {"ttur", c.ttur},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"patience", c.patience},
           {"missing_rate", c.missing_rate},
           {"critic_sees_mask", c.critic_sees_mask},
           {"critic_on_composite", c.critic_on_composite},
           {"freeze_critic", c.freeze_critic}};
}

void from_json(const json& j, TrainConfig& c) {
  if (j.contains("loss")) from_json(j.at("loss"), c.loss);
  if (j.contains("ttur")) from_json(j.at("ttur"), c.ttur);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "patience", c.patience);
  read_opt(j, "missing_rate", c.missing_rate);
  read_opt(j, "critic_sees_mask", c.critic_sees_mask);
  read_opt(j, "critic_on_composite", c.critic_on_composite);
  read_opt(j, "freeze_critic", c.freeze_critic);
}

void to_json(json& j, const SyntheticSpec& c) {
  j = json{{"num_graphs", c.num_graphs},   {"num_nodes", c.num_nodes},
           {"num_features", c.num_features}, {"latent_dim", c.latent_dim},
           {"smoothing_steps", c.smoothing_steps}, {"radius", c.radius},
           {"noise", c.noise},               {"num_classes", c.num_classes}};
}

void from_json(const json& j, SyntheticSpec& c) {
  read_opt(j, "num_graphs", c.num_graphs);
  read_opt(j, "num_nodes", c.num_nodes);
  read_opt(j, "num_features", c.num_features);
  read_opt(j, "latent_dim", c.latent_dim);
  read_opt(j, "smoothing_steps", c.smoothing_steps);
  read_opt(j, "radius", c.radius);
  read_opt(j, "noise", c.noise);
  read_opt(j, "num_classes", c.num_classes);
}

}  // namespace dpgan
