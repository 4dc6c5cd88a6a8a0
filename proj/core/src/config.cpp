#include "dpgan/config.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/serialization.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <type_traits>

namespace dpgan {
namespace {

using nlohmann::json;

constexpr int kHiddenGrid[] = {128, 256, 512, 1024};
constexpr double kLambdaRGrid[] = {1.0, 10.0, 100.0};
constexpr double kLrGGrid[] = {0.01, 0.001, 0.0001};
constexpr double kAlphaGrid[] = {0.5, 0.7, 0.9};

template <typename T, std::size_t N>
bool in_grid(T v, const T (&grid)[N]) {
  return std::any_of(std::begin(grid), std::end(grid), [v](T g) {
    if constexpr (std::is_floating_point_v<T>) return std::abs(v - g) <= 1e-12 * std::max(1.0, std::abs(g));
    return v == g;
  });
}

void reject_unknown(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(section), "expected an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(section.empty() ? k : fmt::format("{}.{}", section, k), "unknown key");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view section) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(section.empty() ? std::string(key) : fmt::format("{}.{}", section, key),
                        "wrong value type");
    }
  }
}

/// Section converters report fields relative to `prefix`.
template <typename T>
void read_section(const json& j, const char* key, T& out, std::string_view prefix) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      from_json(*it, out);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}.{}.{}", prefix, key, e.field()), "invalid value");
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}.{}", prefix, key), e.what());
    }
  }
}

std::string format_grid_int(const int (&g)[4]) { return fmt::format("{{{}, {}, {}, {}}}", g[0], g[1], g[2], g[3]); }

}  // namespace

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::TuDataset: return "tudataset";
    case DatasetFormat::SingleGraph: return "single";
    case DatasetFormat::Synthetic: return "synthetic";
  }
  return "synthetic";
}

DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "tudataset") return DatasetFormat::TuDataset;
  if (s == "single") return DatasetFormat::SingleGraph;
  if (s == "synthetic") return DatasetFormat::Synthetic;
  throw ValidationError(fmt::format("unknown dataset format '{}'", s));
}

RunConfig::RunConfig() {
  generator.graph.hidden_dim = 256;
  generator.mlp.hidden_dim = 256;
  discriminator.hidden_dim = 256;
}

RunConfig parse_run_config(const json& j) {
  reject_unknown(j, "", {"dataset", "missing_rate", "rates", "model", "loss", "ttur", "training", "baselines",
                         "eval", "trials", "seed", "out_dir", "allow_out_of_grid"});
  RunConfig c;
  if (auto it = j.find("dataset"); it != j.end()) {
    reject_unknown(*it, "dataset", {"name", "format", "path", "synthetic", "synthetic_seed"});
    read(*it, "name", c.dataset.name, "dataset");
    if (auto f = it->find("format"); f != it->end()) {
      try {
        c.dataset.format = parse_dataset_format(f->get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError("dataset.format", e.what());
      }
    }
    read(*it, "path", c.dataset.path, "dataset");
    read_section(*it, "synthetic", c.dataset.synthetic, "dataset");
    read(*it, "synthetic_seed", c.dataset.synthetic_seed, "dataset");
  }
  read(j, "missing_rate", c.missing_rate, "");
  read(j, "rates", c.rates, "");
  if (auto it = j.find("model"); it != j.end()) {
    reject_unknown(*it, "model", {"generator", "discriminator"});
    read_section(*it, "generator", c.generator, "model");
    read_section(*it, "discriminator", c.discriminator, "model");
  }
  read_section(j, "loss", c.train.loss, "");
  read_section(j, "ttur", c.train.ttur, "");
  if (auto it = j.find("training"); it != j.end()) {
    reject_unknown(*it, "training",
                   {"epochs", "batch_size", "patience", "critic_sees_mask", "critic_on_composite", "freeze_critic"});
    read(*it, "epochs", c.train.epochs, "training");
    read(*it, "batch_size", c.train.batch_size, "training");
    read(*it, "patience", c.train.patience, "training");
    read(*it, "critic_sees_mask", c.train.critic_sees_mask, "training");
    read(*it, "critic_on_composite", c.train.critic_on_composite, "training");
    read(*it, "freeze_critic", c.train.freeze_critic, "training");
  }
  if (auto it = j.find("baselines"); it != j.end()) {
    reject_unknown(*it, "baselines", {"knn_k", "mean_per_graph"});
    read(*it, "knn_k", c.knn.k, "baselines");
    read(*it, "mean_per_graph", c.mean_per_graph, "baselines");
  }
  if (auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it, "eval", {"downstream"});
    read(*it, "downstream", c.downstream, "eval");
  }
  read(j, "trials", c.trials, "");
  read(j, "seed", c.seed, "");
  read(j, "out_dir", c.out_dir, "");
  read(j, "allow_out_of_grid", c.allow_out_of_grid, "");
  c.train.missing_rate = c.missing_rate;
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config {}", path.string()));
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", fmt::format("{}: {}", path.string(), e.what()));
  }
  RunConfig c = parse_run_config(j);
  if (!c.dataset.path.empty() && std::filesystem::path(c.dataset.path).is_relative()) {
    const char* root = std::getenv("DPGAN_DATA_ROOT");
    const std::filesystem::path base = (root != nullptr && *root != '\0') ? std::filesystem::path(root)
                                                                          : path.parent_path();
    c.dataset.path = (base / c.dataset.path).lexically_normal().string();
  }
  return c;
}

json to_json(const RunConfig& c) {
  json gen = c.generator;
  gen.erase("feature_dim");
  gen.erase("node_capacity");
  json disc = c.discriminator;
  disc.erase("input_dim");
  disc.erase("node_capacity");
  return json{{"dataset",
               {{"name", c.dataset.name},
                {"format", std::string(to_string(c.dataset.format))},
                {"path", c.dataset.path},
                {"synthetic", c.dataset.synthetic},
                {"synthetic_seed", c.dataset.synthetic_seed}}},
              {"missing_rate", c.missing_rate},
              {"rates", c.rates},
              {"model", {{"generator", gen}, {"discriminator", disc}}},
              {"loss", c.train.loss},
              {"ttur", c.train.ttur},
              {"training",
               {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"patience", c.train.patience},
                {"critic_sees_mask", c.train.critic_sees_mask},
                {"critic_on_composite", c.train.critic_on_composite},
                {"freeze_critic", c.train.freeze_critic}}},
              {"baselines", {{"knn_k", c.knn.k}, {"mean_per_graph", c.mean_per_graph}}},
              {"eval", {{"downstream", c.downstream}}},
              {"trials", c.trials},
              {"seed", c.seed},
              {"out_dir", c.out_dir},
              {"allow_out_of_grid", c.allow_out_of_grid}};
}

void validate(const RunConfig& c) {
  if (c.dataset.format != DatasetFormat::Synthetic && c.dataset.path.empty()) {
    throw ConfigError("dataset.path", "required for file-based datasets");
  }
  if (!(c.missing_rate >= 0.0 && c.missing_rate <= 1.0)) throw ConfigError("missing_rate", "must be in [0, 1]");
  if (c.rates.empty()) throw ConfigError("rates", "must not be empty");
  for (double r : c.rates) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rates", "every rate must be in (0, 1]");
  }
  if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (c.train.epochs < 0) throw ConfigError("training.epochs", "must be >= 0");
  if (c.train.batch_size < 1) throw ConfigError("training.batch_size", "must be >= 1");
  if (c.train.ttur.d_steps_per_g < 1) throw ConfigError("ttur.d_steps_per_g", "must be >= 1");
  if (!(c.train.ttur.lr_d > 0.0)) throw ConfigError("ttur.lr_d", "must be > 0");
  if (!(c.train.ttur.lr_g > 0.0)) throw ConfigError("ttur.lr_g", "must be > 0");
  if (!(c.train.loss.lambda_gp > 0.0)) throw ConfigError("loss.lambda_gp", "must be > 0");
  if (c.knn.k < 1) throw ConfigError("baselines.knn_k", "must be >= 1");
  if (c.discriminator.hops < 0) throw ConfigError("model.discriminator.hops", "must be >= 0");
  if (c.discriminator.mode == DiscMode::Graph && c.discriminator.hops != 2) {
    throw ConfigError("model.discriminator.hops", "graph-level critic is built on exactly 2 pooling layers");
  }
  if (c.generator.graph.depth < 1) throw ConfigError("model.generator.graph.depth", "must be >= 1");
  if (c.generator.mlp.depth < 1) throw ConfigError("model.generator.mlp.depth", "must be >= 1");
  if (!(c.generator.graph.pool_ratio > 0.0 && c.generator.graph.pool_ratio <= 1.0)) {
    throw ConfigError("model.generator.graph.pool_ratio", "must be in (0, 1]");
  }

  if (c.allow_out_of_grid) {
    if (!(c.train.loss.lambda_r >= 0.0)) throw ConfigError("loss.lambda_r", "must be >= 0");
    for (int h : {c.generator.graph.hidden_dim, c.generator.mlp.hidden_dim, c.discriminator.hidden_dim}) {
      if (h < 1) throw ConfigError("model", "hidden sizes must be positive");
    }
    return;
  }
  const auto grid_msg = [](std::string_view what) {
    return fmt::format("{} outside the supported grid (set allow_out_of_grid to override)", what);
  };
  if (!in_grid(c.generator.graph.hidden_dim, kHiddenGrid)) {
    throw ConfigError("model.generator.graph.hidden_dim", grid_msg(format_grid_int(kHiddenGrid)));
  }
  if (!in_grid(c.generator.mlp.hidden_dim, kHiddenGrid)) {
    throw ConfigError("model.generator.mlp.hidden_dim", grid_msg(format_grid_int(kHiddenGrid)));
  }
  if (!in_grid(c.discriminator.hidden_dim, kHiddenGrid)) {
    throw ConfigError("model.discriminator.hidden_dim", grid_msg(format_grid_int(kHiddenGrid)));
  }
  if (!in_grid(c.train.loss.lambda_r, kLambdaRGrid)) throw ConfigError("loss.lambda_r", grid_msg("{1, 10, 100}"));
  if (!in_grid(c.train.ttur.lr_g, kLrGGrid)) throw ConfigError("ttur.lr_g", grid_msg("{0.01, 0.001, 0.0001}"));
  if (!in_grid(c.generator.alpha_init, kAlphaGrid)) {
    throw ConfigError("model.generator.alpha_init", grid_msg("{0.5, 0.7, 0.9}"));
  }
}

}  // namespace dpgan
