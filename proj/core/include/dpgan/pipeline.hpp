#pragma once

// End-to-end trial plumbing shared by the command-line tool and the tests:
// dataset loading, splitting, normalization, masking, fitting an imputer
// and scoring it on the test entries.

#include "dpgan/config.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/training.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpgan {

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  bool single_graph = false;

  double mean_nodes() const;
};

Dataset load_dataset(const DatasetConfig& cfg);

/// Applies dataset-dependent defaults: batch size 2 for very large graphs;
/// single-graph datasets use the graph path only and a per-node critic.
void resolve_for_dataset(RunConfig& cfg, const Dataset& data);

enum class Method { Mean, Knn, Dpgan };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// A prepared trial: normalized graphs, split and evaluation masks.
/// Multi-graph datasets split whole graphs 70/10/20; a single graph is split
/// by node rows and its evaluation entries are hidden from training.
struct TrialSetup {
  DatasetSplit split;
  TrainingData data;            // normalized graphs, train/val items
  std::vector<EvalItem> test;   // scored on the zeros of `score`
};

TrialSetup prepare_trial(const Dataset& dataset, double missing_rate, std::uint64_t seed);

struct TrialOutcome {
  TrialResult result;
  std::vector<Matrix> imputed_test;  // normalized units, one per test item
  std::optional<TrainState> state;   // DPGAN only
};

TrialOutcome run_trial(const RunConfig& cfg, const Dataset& dataset, Method method, double missing_rate,
                       std::uint64_t seed);

/// rates x trials, seeds cfg.seed + t. `on_result` sees every row as soon as
/// it exists so callers can persist partial sweeps.
SweepReport run_sweep(const RunConfig& cfg, const Dataset& dataset, Method method, const std::vector<double>& rates,
                      int trials, const std::function<void(const TrialResult&)>& on_result = {});

enum class AblationAxis { Path, Skip, Gan, Norm, Hops };
AblationAxis parse_ablation_axis(std::string_view s);

struct AblationVariant {
  std::string label;
  RunConfig config;
};

std::vector<AblationVariant> ablation_variants(const RunConfig& base, AblationAxis axis);

}  // namespace dpgan
