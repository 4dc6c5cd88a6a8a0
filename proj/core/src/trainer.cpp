#include "dpgan/training.hpp"

#include "dpgan/archive.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/losses.hpp"
#include "dpgan/rng.hpp"
#include "dpgan/serialization.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace dpgan {
namespace {

OptimizerConfig optimizer_config(const TTURConfig& t, double lr) {
  OptimizerConfig c;
  c.kind = t.optimizer;
  c.lr = lr;
  c.beta1 = t.beta1;
  c.beta2 = t.beta2;
  return c;
}

bool all_ones(const MaskMatrix& m) { return m.missing_count() == 0; }

/// Entries that are missing from the model input but whose truth is known.
MaskMatrix score_mask(const MaskMatrix& input, const MaskMatrix& hold) {
  const Matrix ones = Matrix::Ones(input.rows(), input.cols());
  return MaskMatrix(ones - (ones - input.entries()).cwiseProduct(hold.entries()));
}

CriticFn bind_critic(const Discriminator& critic, const Topology& topology, const MaskMatrix* mask) {
  if (mask == nullptr) {
    return [&critic, &topology](const ad::Var& x) { return critic.forward(x, topology); };
  }
  const ad::Var m = ad::constant(mask->entries());
  return [&critic, &topology, m](const ad::Var& x) { return critic.forward(ad::concat_cols(x, m), topology); };
}

void check_finite(double v, const char* what, int epoch, int step) {
  if (!std::isfinite(v)) {
    throw DivergenceError(fmt::format("{} became non-finite at epoch {}, step {}", what, epoch, step));
  }
}

struct StepInputs {
  const Graph* graph;
  const Topology* topology;
  MaskMatrix input;  // what the generator sees
  MaskMatrix score;  // zeros: reconstruction targets
  MaskMatrix hold;
};

}  // namespace

TrainingData TrainingData::from_graphs(std::vector<Graph> normalized, NormStats stats) {
  TrainingData d;
  d.topologies.reserve(normalized.size());
  for (const auto& g : normalized) d.topologies.push_back(Topology::from_adjacency(g.adjacency));
  d.graphs = std::move(normalized);
  d.stats = std::move(stats);
  return d;
}

int TrainingData::max_nodes() const {
  int m = 0;
  for (const auto& g : graphs) m = std::max(m, static_cast<int>(g.num_nodes()));
  return m;
}

int TrainingData::feature_dim() const {
  if (graphs.empty()) throw ValidationError("training data has no graphs");
  return static_cast<int>(graphs.front().num_features());
}

void fit_model_dimensions(const TrainingData& data, const TrainConfig& train_cfg, GeneratorConfig& gen_cfg,
                          DiscriminatorConfig& disc_cfg) {
  gen_cfg.feature_dim = data.feature_dim();
  gen_cfg.node_capacity = data.max_nodes();
  disc_cfg.input_dim = train_cfg.critic_sees_mask ? 2 * gen_cfg.feature_dim : gen_cfg.feature_dim;
  disc_cfg.node_capacity = gen_cfg.node_capacity;
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(ttur.lr_d >= 0.0) || !(ttur.lr_g >= 0.0)) throw ValidationError("learning rates must be >= 0");
  if (ttur.d_steps_per_g < 1) throw ValidationError("d_steps_per_g must be >= 1");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) throw ValidationError("missing_rate must be in [0, 1]");
}

TrainState::TrainState(GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg, TrainConfig train_cfg,
                       std::uint64_t seed, NormStats stats)
    : train_cfg_(std::move(train_cfg)),
      seed_(seed),
      generator_(std::move(gen_cfg), SplitRng(seed).split("generator")),
      critic_(std::move(disc_cfg), SplitRng(seed).split("critic")),
      opt_g_(optimizer_config(train_cfg_.ttur, train_cfg_.ttur.lr_g), generator_.parameters()),
      opt_d_(optimizer_config(train_cfg_.ttur, train_cfg_.ttur.lr_d), critic_.parameters()),
      stats_(std::move(stats)) {
  train_cfg_.validate();
  const int expected = train_cfg_.critic_sees_mask ? 2 * generator_.config().feature_dim
                                                   : generator_.config().feature_dim;
  if (critic_.config().input_dim != expected) {
    throw ValidationError(fmt::format("critic input dim {} does not match the generator output ({})",
                                      critic_.config().input_dim, expected));
  }
}

void TrainState::restore_best() {
  if (!best_generator_.empty()) generator_.parameters().restore(best_generator_);
}

void TrainState::save(const std::filesystem::path& path) const {
  TensorArchive a;
  nlohmann::json meta{{"generator", generator_.config()},
                      {"discriminator", critic_.config()},
                      {"train", train_cfg_},
                      {"seed", seed_}};
  a.put_text("meta.config", meta.dump(2));
  generator_.parameters().save(a, "gen.");
  critic_.parameters().save(a, "critic.");
  opt_g_.save(a, "opt_g.");
  opt_d_.save(a, "opt_d.");
  for (const auto& [name, value] : best_generator_) a.put("best." + name, value);
  a.put("norm.min", stats_.per_feature_min);
  a.put("norm.max", stats_.per_feature_max);
  Matrix scalars(1, 5);
  scalars << epoch_, best_val_, best_epoch_, epochs_since_best_, stopped_early_ ? 1.0 : 0.0;
  a.put("state.scalars", scalars);
  Matrix hist(static_cast<Eigen::Index>(history_.size()), 7);
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const auto& h = history_[i];
    hist.row(static_cast<Eigen::Index>(i)) << h.epoch, h.d_loss, h.g_loss, h.recon, h.gp, h.alpha, h.val_rmse;
  }
  a.put("state.history", hist);
  a.save(path);
}

TrainState TrainState::load(const std::filesystem::path& path) {
  const TensorArchive a = TensorArchive::load(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(a.text("meta.config"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: bad checkpoint metadata: {}", path.string(), e.what()));
  }
  NormStats stats{a.matrix("norm.min"), a.matrix("norm.max")};
  TrainState s(meta.at("generator").get<GeneratorConfig>(), meta.at("discriminator").get<DiscriminatorConfig>(),
               meta.at("train").get<TrainConfig>(), meta.at("seed").get<std::uint64_t>(), std::move(stats));
  s.generator_.parameters().load(a, "gen.");
  s.critic_.parameters().load(a, "critic.");
  s.opt_g_.load(a, "opt_g.");
  s.opt_d_.load(a, "opt_d.");
  for (const auto& name : a.names_with_prefix("best.")) {
    s.best_generator_[name.substr(5)] = a.matrix(name);
  }
  const Matrix scalars = a.matrix("state.scalars");
  s.epoch_ = static_cast<int>(scalars(0, 0));
  s.best_val_ = scalars(0, 1);
  s.best_epoch_ = static_cast<int>(scalars(0, 2));
  s.epochs_since_best_ = static_cast<int>(scalars(0, 3));
  s.stopped_early_ = scalars(0, 4) != 0.0;
  const Matrix hist = a.matrix("state.history");
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    s.history_.push_back(EpochRecord{static_cast<int>(hist(i, 0)), hist(i, 1), hist(i, 2), hist(i, 3),
                                     hist(i, 4), hist(i, 5), hist(i, 6)});
  }
  return s;
}

TrainState train(const TrainingData& data, GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg,
                 const TrainConfig& train_cfg, std::uint64_t seed) {
  if (data.train.empty()) throw ValidationError("train: empty training split");
  TrainState state(std::move(gen_cfg), std::move(disc_cfg), train_cfg, seed, data.stats);
  train_epochs(state, data, train_cfg.epochs);
  return state;
}

void train_epochs(TrainState& state, const TrainingData& data, int epochs) {
  if (data.train.empty()) throw ValidationError("train: empty training split");
  const TrainConfig& cfg = state.train_cfg_;
  const bool sees_mask = cfg.critic_sees_mask;
  const auto gen_params = state.generator_.parameters().vars();
  const auto critic_params = state.critic_.parameters().vars();
  const int n_train = static_cast<int>(data.train.size());

  for (int e = 0; e < epochs && !state.stopped_early_; ++e) {
    const int epoch = state.epoch_;
    const SplitRng epoch_rng = SplitRng(state.seed_).split("train").split(static_cast<std::uint64_t>(epoch));
    const std::vector<int> order = epoch_rng.split("order").permutation(n_train);
    const SplitRng mask_rng = epoch_rng.split("mask");
    const SplitRng gp_root = epoch_rng.split("gp");

    EpochRecord rec;
    rec.epoch = epoch;
    int steps = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int stop = std::min(n_train, start + cfg.batch_size);
      std::vector<StepInputs> batch;
      for (int b = start; b < stop; ++b) {
        const TrainItem& item = data.train[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])];
        const Graph& g = data.graphs[static_cast<std::size_t>(item.graph_id)];
        std::uint64_t mask_seed = mask_rng.split(static_cast<std::uint64_t>(item.graph_id)).key();
        MaskMatrix sampled = sample_mask(g.num_nodes(), g.num_features(), cfg.missing_rate, mask_seed);
        MaskMatrix input = sampled & item.hold;
        MaskMatrix score = score_mask(input, item.hold);
        batch.push_back({&g, &data.topologies[static_cast<std::size_t>(item.graph_id)], std::move(input),
                         std::move(score), item.hold});
      }

      // Critic updates against a fixed generator.
      double d_loss = 0.0;
      double gp = 0.0;
      if (!cfg.freeze_critic) {
        std::vector<Matrix> fakes;
        std::vector<Matrix> reals;
        {
          ad::NoGradGuard no_grad;
          for (const auto& s : batch) {
            const Matrix& x = s.graph->node_features;
            const Matrix x_tilde = state.generator_.forward(x, s.input, *s.topology).value();
            fakes.push_back(cfg.critic_on_composite ? compose_imputation(x, s.input, x_tilde) : x_tilde);
            reals.push_back(all_ones(s.hold) ? x : compose_imputation(x, s.hold, x_tilde));
          }
        }
        for (int d = 0; d < cfg.ttur.d_steps_per_g; ++d) {
          std::vector<CriticSample> samples;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            samples.push_back({bind_critic(state.critic_, *batch[i].topology, sees_mask ? &batch[i].input : nullptr),
                               reals[i], fakes[i]});
          }
          SplitRng gp_rng = gp_root.split(static_cast<std::uint64_t>(steps * cfg.ttur.d_steps_per_g + d));
          const CriticLossParts parts = critic_loss_parts(samples, cfg.loss, gp_rng);
          check_finite(parts.total.scalar(), "critic loss", epoch, steps);
          const auto grads = ad::grad(parts.total, critic_params);
          state.opt_d_.step(grads);
          d_loss = parts.total.scalar();
          gp = parts.penalty;
        }
      }

      // Generator (and alpha) update.
      ad::Var g_total;
      double recon_sum = 0.0;
      for (const auto& s : batch) {
        const Matrix& x = s.graph->node_features;
        const ad::Var x_tilde = state.generator_.forward(x, s.input, *s.topology);
        const CriticFn critic = bind_critic(state.critic_, *s.topology, sees_mask ? &s.input : nullptr);
        ad::Var loss;
        if (all_ones(s.hold)) {
          loss = generator_loss(critic, x, s.input, x_tilde, cfg.loss);
          recon_sum += reconstruction_loss(x, x_tilde.value(), s.input, cfg.loss.recon_norm);
        } else {
          // Targets are restricted to held entries; the critic still judges the input composite.
          const ad::Var recon = reconstruction_loss(x, x_tilde, s.score, cfg.loss.recon_norm);
          recon_sum += recon.scalar();
          loss = ad::scale(recon, cfg.loss.lambda_r);
          if (cfg.loss.adversarial) {
            loss = ad::sub(loss, critic_value(critic(compose_imputation(x, s.input, x_tilde))));
          }
        }
        g_total = g_total.defined() ? ad::add(g_total, loss) : loss;
      }
      g_total = ad::scale(g_total, 1.0 / static_cast<double>(batch.size()));
      check_finite(g_total.scalar(), "generator loss", epoch, steps);
      const auto g_grads = ad::grad(g_total, gen_params);
      state.opt_g_.step(g_grads);

      rec.d_loss += d_loss;
      rec.gp += gp;
      rec.g_loss += g_total.scalar();
      rec.recon += recon_sum / static_cast<double>(batch.size());
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    rec.d_loss *= inv;
    rec.gp *= inv;
    rec.g_loss *= inv;
    rec.recon *= inv;
    rec.alpha = state.generator_.alpha();
    if (!data.val.empty()) rec.val_rmse = evaluate_rmse(state.generator_, data, data.val);
    state.history_.push_back(rec);
    ++state.epoch_;

    // Without a validation set the latest weights count as the best.
    if (data.val.empty() || rec.val_rmse < state.best_val_) {
      if (!data.val.empty()) state.best_val_ = rec.val_rmse;
      state.best_epoch_ = epoch;
      state.epochs_since_best_ = 0;
      state.best_generator_ = state.generator_.parameters().snapshot();
    } else {
      ++state.epochs_since_best_;
      if (cfg.patience > 0 && state.epochs_since_best_ >= cfg.patience) state.stopped_early_ = true;
    }
  }
}

double evaluate_rmse(const Generator& generator, const TrainingData& data, const std::vector<EvalItem>& items) {
  ad::NoGradGuard no_grad;
  double sq = 0.0;
  Eigen::Index count = 0;
  for (const auto& item : items) {
    const Graph& g = data.graphs[static_cast<std::size_t>(item.graph_id)];
    const Matrix x_tilde = generator.forward(g.node_features, item.input,
                                             data.topologies[static_cast<std::size_t>(item.graph_id)])
                               .value();
    const Matrix miss = Matrix::Ones(g.num_nodes(), g.num_features()) - item.score.entries();
    sq += (x_tilde - g.node_features).cwiseProduct(miss).squaredNorm();
    count += item.score.missing_count();
  }
  if (count == 0) throw ValidationError("evaluate_rmse: no missing entries to score");
  return std::sqrt(sq / static_cast<double>(count));
}

Matrix impute_normalized(const Generator& generator, const Matrix& x_norm, const MaskMatrix& r,
                         const Topology& topology) {
  ad::NoGradGuard no_grad;
  const Matrix x_tilde = generator.forward(x_norm, r, topology).value();
  return compose_imputation(x_norm, r, x_tilde);
}

Matrix impute(const TrainState& state, const Graph& graph, const MaskMatrix& r) {
  const GeneratorConfig& cfg = state.generator().config();
  if (graph.num_features() != cfg.feature_dim) {
    throw ValidationError(fmt::format("impute: graph has {} features, model was trained on {}",
                                      graph.num_features(), cfg.feature_dim));
  }
  if (r.rows() != graph.num_nodes() || r.cols() != graph.num_features()) {
    throw ValidationError("impute: mask shape does not match the graph");
  }
  // Missing raw values may be NaN placeholders; zero them before normalizing.
  const Matrix raw = graph.node_features.cwiseProduct(r.entries()).unaryExpr([](double v) {
    return std::isfinite(v) ? v : 0.0;
  });
  const Matrix x_norm = state.norm_stats().normalize(raw);
  const Topology topo = Topology::from_adjacency(graph.adjacency);
  Matrix x_tilde;
  {
    ad::NoGradGuard no_grad;
    x_tilde = state.generator().forward(x_norm, r, topo).value();
  }
  const Matrix filled = state.norm_stats().denormalize(x_tilde);
  Matrix out = graph.node_features;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (!r.observed(i, j)) out(i, j) = filled(i, j);
    }
  }
  return out;
}

}  // namespace dpgan
