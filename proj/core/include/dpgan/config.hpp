#pragma once

#include "dpgan/baselines.hpp"
#include "dpgan/datasets.hpp"
#include "dpgan/discriminator.hpp"
#include "dpgan/generator.hpp"
#include "dpgan/train_config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dpgan {

enum class DatasetFormat { TuDataset, SingleGraph, Synthetic };
std::string_view to_string(DatasetFormat f);
DatasetFormat parse_dataset_format(std::string_view s);

struct DatasetConfig {
  std::string name = "synthetic";
  DatasetFormat format = DatasetFormat::Synthetic;
  std::string path;  // relative paths resolve against $DPGAN_DATA_ROOT, else the config's directory
  SyntheticSpec synthetic;
  std::uint64_t synthetic_seed = 1;
};

/// Everything a command needs. Sections mirror the module configs.
struct RunConfig {
  DatasetConfig dataset;
  double missing_rate = 0.1;
  std::vector<double> rates{0.1, 0.3, 0.5, 0.7, 0.99, 1.0};
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainConfig train;
  KnnConfig knn;
  bool mean_per_graph = false;
  bool downstream = false;
  int trials = 5;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
  bool allow_out_of_grid = false;

  RunConfig();
};

/// Parses and validates; throws ConfigError naming the offending field.
RunConfig parse_run_config(const nlohmann::json& j);
/// Reads a JSON file, resolves the dataset path and validates.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
/// Structural checks plus the hyperparameter grid (skipped with
/// allow_out_of_grid).
void validate(const RunConfig& c);

}  // namespace dpgan
