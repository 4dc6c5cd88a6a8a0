#pragma once

#include "dpgan/discriminator.hpp"
#include "dpgan/generator.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/optim.hpp"
#include "dpgan/params.hpp"
#include "dpgan/train_config.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace dpgan {

/// A training graph. `hold` marks entries whose ground truth the trainer may
/// use; it is all ones for fully observed training graphs and masks out the
/// evaluation entries of a transductive (single-graph) split.
struct TrainItem {
  int graph_id = 0;
  MaskMatrix hold;
};

/// An evaluation graph: the model sees `input`, the error is measured on the
/// zeros of `score`.
struct EvalItem {
  int graph_id = 0;
  MaskMatrix input;
  MaskMatrix score;
};

/// Normalized graphs with their topologies and the train / validation items.
struct TrainingData {
  std::vector<Graph> graphs;
  std::vector<Topology> topologies;
  std::vector<TrainItem> train;
  std::vector<EvalItem> val;
  NormStats stats;

  static TrainingData from_graphs(std::vector<Graph> normalized, NormStats stats);
  int max_nodes() const;
  int feature_dim() const;
};

/// Fills the data-dependent sizes (feature dim, node capacity) of both model
/// configs. The critic input doubles when it also sees the mask.
void fit_model_dimensions(const TrainingData& data, const TrainConfig& train_cfg, GeneratorConfig& gen_cfg,
                          DiscriminatorConfig& disc_cfg);

struct EpochRecord {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double recon = 0.0;
  double gp = 0.0;
  double alpha = 0.0;
  double val_rmse = std::numeric_limits<double>::quiet_NaN();
};

/// Everything needed to resume or reuse a run: both players, optimizer
/// moments, history, the best-validation generator and the normalization.
class TrainState {
 public:
  TrainState(GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg, TrainConfig train_cfg, std::uint64_t seed,
             NormStats stats);
  TrainState(TrainState&&) = default;
  TrainState& operator=(TrainState&&) = default;
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  const TrainConfig& train_config() const { return train_cfg_; }
  std::uint64_t seed() const { return seed_; }
  Generator& generator() { return generator_; }
  const Generator& generator() const { return generator_; }
  Discriminator& critic() { return critic_; }
  const Discriminator& critic() const { return critic_; }
  Optimizer& generator_optimizer() { return opt_g_; }
  Optimizer& critic_optimizer() { return opt_d_; }
  const NormStats& norm_stats() const { return stats_; }

  int epoch() const { return epoch_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  double best_val_rmse() const { return best_val_; }
  int best_epoch() const { return best_epoch_; }
  bool stopped_early() const { return stopped_early_; }

  /// Loads the best-validation generator weights (no-op before any epoch).
  void restore_best();

  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);

 private:
  friend void train_epochs(TrainState& state, const TrainingData& data, int epochs);

  TrainConfig train_cfg_;
  std::uint64_t seed_;
  Generator generator_;
  Discriminator critic_;
  Optimizer opt_g_;
  Optimizer opt_d_;
  NormStats stats_;
  int epoch_ = 0;
  std::vector<EpochRecord> history_;
  double best_val_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = -1;
  int epochs_since_best_ = 0;
  bool stopped_early_ = false;
  ParameterSet::Snapshot best_generator_;
};

/// Builds a fresh state and runs `train_cfg.epochs` epochs. The returned
/// state holds the last-epoch weights; call restore_best() for the
/// best-validation generator.
TrainState train(const TrainingData& data, GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg,
                 const TrainConfig& train_cfg, std::uint64_t seed);

/// Continues training for up to `epochs` more epochs (early stopping applies).
/// Epoch randomness derives from (seed, epoch), so a state resumed from a
/// checkpoint continues exactly as the uninterrupted run would.
void train_epochs(TrainState& state, const TrainingData& data, int epochs);

/// Pooled masked RMSE of the current generator over evaluation items.
double evaluate_rmse(const Generator& generator, const TrainingData& data, const std::vector<EvalItem>& items);

/// Composite imputation in normalized units.
Matrix impute_normalized(const Generator& generator, const Matrix& x_norm, const MaskMatrix& r,
                         const Topology& topology);

/// Imputes a raw (unnormalized) graph; observed entries are returned
/// unchanged, missing ones come from the generator in original units.
Matrix impute(const TrainState& state, const Graph& graph, const MaskMatrix& r);

}  // namespace dpgan
