#include "dpgan/pipeline.hpp"

#include "dpgan/baselines.hpp"
#include "dpgan/datasets.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/rng.hpp"

#include <fmt/format.h>

#include <chrono>

namespace dpgan {
namespace {

MaskMatrix eval_mask(const Graph& g, double rate, std::uint64_t seed, std::string_view tag, int id) {
  const std::uint64_t s = SplitRng(seed).split(tag).split(static_cast<std::uint64_t>(id)).key();
  return sample_mask(g.num_nodes(), g.num_features(), rate, s);
}

/// Keeps the sampled mask on `rows` and marks every other row observed.
MaskMatrix restrict_to_rows(const MaskMatrix& m, const std::vector<int>& rows) {
  Matrix e = Matrix::Ones(m.rows(), m.cols());
  for (int i : rows) e.row(i) = m.entries().row(i);
  return MaskMatrix(std::move(e));
}

TrialSetup prepare_multi_graph(const Dataset& dataset, double rate, std::uint64_t seed) {
  TrialSetup t;
  t.split = split_dataset(static_cast<int>(dataset.graphs.size()), seed);
  auto [normalized, stats] = normalize_features(dataset.graphs, t.split.train_ids);
  t.data = TrainingData::from_graphs(std::move(normalized), std::move(stats));
  for (int id : t.split.train_ids) {
    const Graph& g = t.data.graphs[static_cast<std::size_t>(id)];
    t.data.train.push_back({id, MaskMatrix::ones(g.num_nodes(), g.num_features())});
  }
  for (int id : t.split.val_ids) {
    MaskMatrix m = eval_mask(t.data.graphs[static_cast<std::size_t>(id)], rate, seed, "val-mask", id);
    if (m.missing_count() > 0) t.data.val.push_back({id, m, m});
  }
  for (int id : t.split.test_ids) {
    MaskMatrix m = eval_mask(t.data.graphs[static_cast<std::size_t>(id)], rate, seed, "test-mask", id);
    t.test.push_back({id, m, m});
  }
  return t;
}

TrialSetup prepare_single_graph(const Dataset& dataset, double rate, std::uint64_t seed) {
  TrialSetup t;
  const Graph& raw = dataset.graphs.front();
  t.split = split_dataset(static_cast<int>(raw.num_nodes()), seed);
  NormStats stats;
  stats.per_feature_min = Vector::Constant(raw.num_features(), std::numeric_limits<double>::infinity());
  stats.per_feature_max = -stats.per_feature_min;
  for (int i : t.split.train_ids) {
    stats.per_feature_min = stats.per_feature_min.cwiseMin(raw.node_features.row(i).transpose());
    stats.per_feature_max = stats.per_feature_max.cwiseMax(raw.node_features.row(i).transpose());
  }
  Graph g = raw;
  g.node_features = stats.normalize(raw.node_features);
  std::vector<Graph> graphs{std::move(g)};
  t.data = TrainingData::from_graphs(std::move(graphs), std::move(stats));

  const Graph& gn = t.data.graphs.front();
  const MaskMatrix test = restrict_to_rows(eval_mask(gn, rate, seed, "test-mask", 0), t.split.test_ids);
  const MaskMatrix val = restrict_to_rows(eval_mask(gn, rate, seed, "val-mask", 0), t.split.val_ids);
  const MaskMatrix observed = test & val;
  t.data.train.push_back({0, observed});
  if (val.missing_count() > 0) t.data.val.push_back({0, observed, val});
  t.test.push_back({0, test, test});
  return t;
}

}  // namespace

double Dataset::mean_nodes() const {
  if (graphs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : graphs) total += static_cast<double>(g.num_nodes());
  return total / static_cast<double>(graphs.size());
}

Dataset load_dataset(const DatasetConfig& cfg) {
  Dataset d;
  d.name = cfg.name;
  switch (cfg.format) {
    case DatasetFormat::TuDataset: d.graphs = load_tudataset(cfg.path); break;
    case DatasetFormat::SingleGraph:
      d.graphs.push_back(load_single_graph(cfg.path));
      d.single_graph = true;
      break;
    case DatasetFormat::Synthetic: d.graphs = make_smooth_signal_graphs(cfg.synthetic, cfg.synthetic_seed); break;
  }
  if (d.graphs.empty()) throw FormatError(fmt::format("dataset '{}' contains no graphs", cfg.name));
  return d;
}

void resolve_for_dataset(RunConfig& cfg, const Dataset& data) {
  if (data.mean_nodes() > 1000.0) cfg.train.batch_size = 2;
  if (data.single_graph) {
    // One graph has no fixed node axis to mix across graphs: graph path only,
    // and a per-node critic.
    cfg.generator.path = GeneratorPath::GraphOnly;
    cfg.discriminator.mode = DiscMode::Subgraph;
    cfg.discriminator.hops = 0;
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mean: return "mean";
    case Method::Knn: return "knn";
    case Method::Dpgan: return "dpgan";
  }
  return "dpgan";
}

Method parse_method(std::string_view s) {
  if (s == "mean") return Method::Mean;
  if (s == "knn") return Method::Knn;
  if (s == "dpgan") return Method::Dpgan;
  throw ValidationError(fmt::format("unknown method '{}' (expected mean, knn or dpgan)", s));
}

TrialSetup prepare_trial(const Dataset& dataset, double missing_rate, std::uint64_t seed) {
  return dataset.single_graph ? prepare_single_graph(dataset, missing_rate, seed)
                              : prepare_multi_graph(dataset, missing_rate, seed);
}

TrialOutcome run_trial(const RunConfig& cfg, const Dataset& dataset, Method method, double missing_rate,
                       std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialSetup setup = prepare_trial(dataset, missing_rate, seed);
  const TrainingData& data = setup.data;
  TrialOutcome out;

  auto train_means = [&]() {
    std::vector<Matrix> xs;
    std::vector<MaskMatrix> ms;
    for (const auto& item : data.train) {
      xs.push_back(data.graphs[static_cast<std::size_t>(item.graph_id)].node_features);
      ms.push_back(item.hold);
    }
    return FeatureMeans::fit(xs, ms);
  };

  switch (method) {
    case Method::Mean:
    case Method::Knn: {
      const FeatureMeans dataset_means = train_means();
      for (const auto& item : setup.test) {
        const Matrix& x = data.graphs[static_cast<std::size_t>(item.graph_id)].node_features;
        const FeatureMeans means = cfg.mean_per_graph ? FeatureMeans::fit(x, item.input) : dataset_means;
        out.imputed_test.push_back(method == Method::Mean ? mean_impute(x, item.input, means)
                                                          : knn_impute(x, item.input, cfg.knn, means));
      }
      break;
    }
    case Method::Dpgan: {
      GeneratorConfig gen = cfg.generator;
      DiscriminatorConfig disc = cfg.discriminator;
      TrainConfig tc = cfg.train;
      tc.missing_rate = missing_rate;
      fit_model_dimensions(data, tc, gen, disc);
      TrainState state = train(data, gen, disc, tc, seed);
      state.restore_best();
      for (const auto& item : setup.test) {
        const std::size_t id = static_cast<std::size_t>(item.graph_id);
        out.imputed_test.push_back(
            impute_normalized(state.generator(), data.graphs[id].node_features, item.input, data.topologies[id]));
      }
      if (gen.path == GeneratorPath::Dual) out.result.alpha_final = state.generator().alpha();
      out.state.emplace(std::move(state));
      break;
    }
  }

  RmseAccumulator norm_acc;
  RmseAccumulator raw_acc;
  for (std::size_t t = 0; t < setup.test.size(); ++t) {
    const auto& item = setup.test[t];
    const std::size_t id = static_cast<std::size_t>(item.graph_id);
    norm_acc.add(data.graphs[id].node_features, out.imputed_test[t], item.score);
    raw_acc.add(dataset.graphs[id].node_features, data.stats.denormalize(out.imputed_test[t]), item.score);
  }
  out.result.method = std::string(to_string(method));
  out.result.dataset = dataset.name;
  out.result.missing_rate = missing_rate;
  out.result.seed = seed;
  out.result.rmse_norm = norm_acc.value();
  out.result.rmse_raw = raw_acc.value();
  out.result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SweepReport run_sweep(const RunConfig& cfg, const Dataset& dataset, Method method, const std::vector<double>& rates,
                      int trials, const std::function<void(const TrialResult&)>& on_result) {
  if (rates.empty()) throw ValidationError("run_sweep: no missing rates");
  if (trials < 1) throw ValidationError("run_sweep: trials must be >= 1");
  std::vector<TrialResult> results;
  for (double rate : rates) {
    for (int t = 0; t < trials; ++t) {
      TrialOutcome o = run_trial(cfg, dataset, method, rate, cfg.seed + static_cast<std::uint64_t>(t));
      if (on_result) on_result(o.result);
      results.push_back(std::move(o.result));
    }
  }
  return SweepReport::aggregate(std::move(results));
}

AblationAxis parse_ablation_axis(std::string_view s) {
  if (s == "path") return AblationAxis::Path;
  if (s == "skip") return AblationAxis::Skip;
  if (s == "gan") return AblationAxis::Gan;
  if (s == "norm") return AblationAxis::Norm;
  if (s == "hops") return AblationAxis::Hops;
  throw ValidationError(fmt::format("unknown ablation axis '{}' (expected path, skip, gan, norm or hops)", s));
}

std::vector<AblationVariant> ablation_variants(const RunConfig& base, AblationAxis axis) {
  std::vector<AblationVariant> out;
  auto add = [&](std::string label, auto&& edit) {
    RunConfig c = base;
    edit(c);
    out.push_back({std::move(label), std::move(c)});
  };
  switch (axis) {
    case AblationAxis::Path:
      add("dual", [](RunConfig& c) { c.generator.path = GeneratorPath::Dual; });
      add("graph-only", [](RunConfig& c) { c.generator.path = GeneratorPath::GraphOnly; });
      add("mlp-only", [](RunConfig& c) { c.generator.path = GeneratorPath::MlpOnly; });
      break;
    case AblationAxis::Skip:
      add("skip-concat", [](RunConfig& c) {
        c.generator.graph.skip_merge = SkipMerge::Concat;
        c.generator.mlp.skip = true;
      });
      add("skip-add", [](RunConfig& c) {
        c.generator.graph.skip_merge = SkipMerge::Add;
        c.generator.mlp.skip = true;
      });
      add("no-skip", [](RunConfig& c) {
        c.generator.graph.skip_merge = SkipMerge::None;
        c.generator.mlp.skip = false;
      });
      break;
    case AblationAxis::Gan:
      add("wgan-gp", [](RunConfig& c) {
        c.train.loss.adversarial = true;
        c.train.freeze_critic = false;
      });
      add("no-gan", [](RunConfig& c) {
        c.train.loss.adversarial = false;
        c.train.freeze_critic = true;
      });
      break;
    case AblationAxis::Norm:
      add("L1", [](RunConfig& c) { c.train.loss.recon_norm = ReconNorm::L1; });
      add("L2", [](RunConfig& c) { c.train.loss.recon_norm = ReconNorm::L2; });
      break;
    case AblationAxis::Hops:
      for (int h = 0; h <= 3; ++h) {
        add(fmt::format("hops-{}", h), [h](RunConfig& c) {
          c.discriminator.mode = DiscMode::Subgraph;
          c.discriminator.hops = h;
        });
      }
      add("graph", [](RunConfig& c) {
        c.discriminator.mode = DiscMode::Graph;
        c.discriminator.hops = 2;
      });
      break;
  }
  return out;
}

}  // namespace dpgan
