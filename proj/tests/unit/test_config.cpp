#include "dpgan/config.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/pipeline.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace dpgan {
namespace {

using nlohmann::json;

std::string field_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(Config, DefaultsParse) {
  const RunConfig c = parse_run_config(json::object());
  EXPECT_EQ(c.dataset.format, DatasetFormat::Synthetic);
  EXPECT_EQ(c.generator.graph.hidden_dim, 256);
  EXPECT_EQ(c.discriminator.hops, 2);
  EXPECT_EQ(c.train.loss.lambda_r, 10.0);
  EXPECT_EQ(c.trials, 5);
  EXPECT_EQ(c.rates.size(), 6u);
}

TEST(Config, GridIsEnforcedUnlessOverridden) {
  json j = {{"loss", {{"lambda_r", 7}}}};
  EXPECT_EQ(field_of(j), "loss.lambda_r");
  j["allow_out_of_grid"] = true;
  EXPECT_EQ(parse_run_config(j).train.loss.lambda_r, 7.0);
  EXPECT_EQ(field_of({{"model", {{"generator", {{"graph", {{"hidden_dim", 100}}}}}}}}),
            "model.generator.graph.hidden_dim");
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_EQ(field_of({{"epochs", 3}}), "epochs");
  EXPECT_EQ(field_of({{"training", {{"epoch", 3}}}}), "training.epoch");
}

TEST(Config, StructuralChecks) {
  EXPECT_EQ(field_of({{"model", {{"discriminator", {{"mode", "graph"}, {"hops", 1}}}}}}), "model.discriminator.hops");
  EXPECT_EQ(field_of({{"rates", json::array({0.0})}}), "rates");
  EXPECT_EQ(field_of({{"trials", 0}}), "trials");
  EXPECT_EQ(field_of({{"dataset", {{"format", "tudataset"}}}}), "dataset.path");
  EXPECT_FALSE(field_of({{"dataset", {{"format", "nonsense"}}}}).empty());
}

TEST(Config, JsonRoundTrip) {
  json j = {{"missing_rate", 0.3},
            {"rates", {0.1, 0.5}},
            {"loss", {{"lambda_r", 100}, {"recon_norm", "L1"}}},
            {"ttur", {{"lr_g", 0.01}}},
            {"model", {{"discriminator", {{"hops", 1}}}, {"generator", {{"path", "graph"}}}}},
            {"training", {{"epochs", 7}}},
            {"seed", 9}};
  const RunConfig a = parse_run_config(j);
  const RunConfig b = parse_run_config(to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(b.train.loss.recon_norm, ReconNorm::L1);
  EXPECT_EQ(b.train.epochs, 7);
  EXPECT_EQ(b.discriminator.hops, 1);
  EXPECT_EQ(b.train.missing_rate, 0.3);
  EXPECT_EQ(b.seed, 9u);
}

TEST(Config, LoadRejectsMissingAndMalformedFiles) {
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), IoError);
  const auto p = std::filesystem::temp_directory_path() / "dpgan_bad_config.json";
  std::ofstream(p) << "{ not json";
  EXPECT_THROW(load_run_config(p), ConfigError);
}

TEST(Config, DeskConfigLoads) {
  const RunConfig c = load_run_config(std::filesystem::path(DPGAN_SOURCE_DIR) / "configs" / "desk_synthetic.json");
  EXPECT_EQ(c.generator.graph.hidden_dim, 64);
  EXPECT_EQ(c.train.ttur.lr_d, 4e-4);
  for (const char* name : {"enzymes.json", "cora.json"}) {
    EXPECT_NO_THROW(load_run_config(std::filesystem::path(DPGAN_SOURCE_DIR) / "configs" / name)) << name;
  }
}

TEST(Config, AblationVariantCounts) {
  const RunConfig base;
  EXPECT_EQ(ablation_variants(base, AblationAxis::Hops).size(), 5u);
  EXPECT_EQ(ablation_variants(base, AblationAxis::Path).size(), 3u);
  EXPECT_EQ(ablation_variants(base, AblationAxis::Norm).size(), 2u);
  EXPECT_EQ(ablation_variants(base, AblationAxis::Skip).size(), 3u);
  EXPECT_EQ(ablation_variants(base, AblationAxis::Gan).size(), 2u);
  for (const auto& v : ablation_variants(base, AblationAxis::Hops)) EXPECT_NO_THROW(validate(v.config)) << v.label;
  EXPECT_THROW(parse_ablation_axis("depth"), ValidationError);
}

TEST(Config, SingleGraphDefaults) {
  RunConfig c;
  Dataset d;
  d.single_graph = true;
  const std::vector<std::pair<int, int>> edges{{0, 1}};
  d.graphs.push_back(Graph::from_edges(Matrix::Zero(3, 2), edges));
  resolve_for_dataset(c, d);
  EXPECT_EQ(c.generator.path, GeneratorPath::GraphOnly);
  EXPECT_EQ(c.discriminator.mode, DiscMode::Subgraph);
  EXPECT_EQ(c.discriminator.hops, 0);
}

}  // namespace
}  // namespace dpgan
