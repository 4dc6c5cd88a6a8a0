// Command-line front end: prepare, train, impute, eval, sweep, ablate.

#include "dpgan/archive.hpp"
#include "dpgan/config.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/pipeline.hpp"
#include "dpgan/training.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kDivergence = 3, kIo = 4 };

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<double> rates;
};

dpgan::RunConfig load_config(const CommonArgs& a) {
  dpgan::RunConfig c = dpgan::load_run_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (a.out) c.out_dir = *a.out;
  if (!a.rates.empty()) {
    c.missing_rate = a.rates.front();
    c.train.missing_rate = c.missing_rate;
    c.rates = a.rates;
  }
  dpgan::validate(c);
  return c;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw dpgan::IoError(fmt::format("cannot create {}: {}", dir, ec.message()));
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw dpgan::IoError(fmt::format("cannot write {}", path.string()));
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json epoch_json(const dpgan::EpochRecord& r) {
  return json{{"epoch", r.epoch},       {"d_loss", number_or_null(r.d_loss)}, {"g_loss", number_or_null(r.g_loss)},
              {"recon", r.recon},        {"gp", r.gp},                         {"alpha", r.alpha},
              {"val_rmse", number_or_null(r.val_rmse)}};
}

json result_json(const dpgan::TrialResult& r) {
  json j{{"method", r.method},        {"dataset", r.dataset},   {"missing_rate", r.missing_rate},
         {"seed", r.seed},            {"rmse_norm", r.rmse_norm}, {"rmse_raw", r.rmse_raw},
         {"wall_time_s", r.wall_time_s}};
  j["alpha_final"] = r.alpha_final ? json(*r.alpha_final) : json(nullptr);
  return j;
}

dpgan::Dataset load_resolved(dpgan::RunConfig& cfg) {
  dpgan::Dataset data = dpgan::load_dataset(cfg.dataset);
  dpgan::resolve_for_dataset(cfg, data);
  return data;
}

int cmd_prepare(const CommonArgs& args) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::Dataset data = load_resolved(cfg);
  const fs::path out = ensure_dir(cfg.out_dir);
  int max_nodes = 0;
  std::size_t edges = 0;
  for (const auto& g : data.graphs) {
    max_nodes = std::max(max_nodes, static_cast<int>(g.num_nodes()));
    edges += static_cast<std::size_t>(g.adjacency.nonZeros() / 2);
  }
  const json summary{{"name", data.name},
                     {"graphs", data.graphs.size()},
                     {"single_graph", data.single_graph},
                     {"features", data.graphs.front().num_features()},
                     {"mean_nodes", data.mean_nodes()},
                     {"max_nodes", max_nodes},
                     {"edges", edges}};
  write_text(out / "dataset.json", summary.dump(2) + "\n");
  write_text(out / "resolved_config.json", dpgan::to_json(cfg).dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_train(const CommonArgs& args, const std::string& resume) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::Dataset data = load_resolved(cfg);
  const fs::path out = ensure_dir(cfg.out_dir);
  write_text(out / "resolved_config.json", dpgan::to_json(cfg).dump(2) + "\n");

  const dpgan::TrialSetup setup = dpgan::prepare_trial(data, cfg.missing_rate, cfg.seed);
  std::optional<dpgan::TrainState> state;
  if (!resume.empty()) {
    state.emplace(dpgan::TrainState::load(resume));
  } else {
    dpgan::GeneratorConfig gen = cfg.generator;
    dpgan::DiscriminatorConfig disc = cfg.discriminator;
    dpgan::fit_model_dimensions(setup.data, cfg.train, gen, disc);
    state.emplace(gen, disc, cfg.train, cfg.seed, setup.data.stats);
  }

  std::ofstream log(out / "train_log.jsonl", resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw dpgan::IoError("cannot write train_log.jsonl");
  while (state->epoch() < cfg.train.epochs && !state->stopped_early()) {
    dpgan::train_epochs(*state, setup.data, 1);
    log << epoch_json(state->history().back()).dump() << "\n" << std::flush;
  }
  state->save(out / "checkpoint.dpgt");

  state->restore_best();
  dpgan::RmseAccumulator acc;
  for (const auto& item : setup.test) {
    const auto id = static_cast<std::size_t>(item.graph_id);
    acc.add(setup.data.graphs[id].node_features,
            dpgan::impute_normalized(state->generator(), setup.data.graphs[id].node_features, item.input,
                                     setup.data.topologies[id]),
            item.score);
  }
  const json summary{{"epochs", state->epoch()},
                     {"best_epoch", state->best_epoch()},
                     {"best_val_rmse", number_or_null(state->best_val_rmse())},
                     {"test_rmse", acc.value()},
                     {"alpha", state->generator().alpha()},
                     {"stopped_early", state->stopped_early()}};
  write_text(out / "train_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_impute(const CommonArgs& args, const std::string& checkpoint, const std::string& mask_file) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::Dataset data = load_resolved(cfg);
  const fs::path out = ensure_dir(cfg.out_dir);
  dpgan::TrainState state = dpgan::TrainState::load(checkpoint);
  state.restore_best();
  if (!mask_file.empty() && data.graphs.size() != 1) {
    throw dpgan::ValidationError("--mask is only supported for single-graph datasets");
  }
  for (std::size_t i = 0; i < data.graphs.size(); ++i) {
    const dpgan::Graph& g = data.graphs[i];
    const dpgan::MaskMatrix r =
        !mask_file.empty()
            ? dpgan::MaskMatrix(dpgan::read_matrix_csv(mask_file))
            : dpgan::sample_mask(g.num_nodes(), g.num_features(), cfg.missing_rate,
                                 dpgan::SplitRng(cfg.seed).split("impute").split(i).key());
    dpgan::write_matrix_csv(out / fmt::format("imputed_{:05}.csv", i), dpgan::impute(state, g, r));
    dpgan::write_matrix_csv(out / fmt::format("mask_{:05}.csv", i), r.entries());
  }
  std::cout << fmt::format("imputed {} graph(s) into {}\n", data.graphs.size(), out.string());
  return kOk;
}

int cmd_eval(const CommonArgs& args, const std::string& method_name) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::Method method = dpgan::parse_method(method_name);
  const dpgan::Dataset data = load_resolved(cfg);
  const fs::path out = ensure_dir(cfg.out_dir);
  dpgan::TrialOutcome o = dpgan::run_trial(cfg, data, method, cfg.missing_rate, cfg.seed);
  json j = result_json(o.result);
  if (cfg.downstream && !data.single_graph) {
    dpgan::TrialSetup setup = dpgan::prepare_trial(data, cfg.missing_rate, cfg.seed);
    std::vector<dpgan::Graph> graphs = setup.data.graphs;
    for (std::size_t t = 0; t < setup.test.size(); ++t) {
      graphs[static_cast<std::size_t>(setup.test[t].graph_id)].node_features = o.imputed_test[t];
    }
    j["downstream_accuracy"] =
        dpgan::downstream_accuracy(graphs, setup.split.train_ids, setup.split.test_ids, cfg.seed);
  }
  dpgan::emit_report(dpgan::SweepReport::aggregate({o.result}), out);
  write_text(out / "resolved_config.json", dpgan::to_json(cfg).dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

/// Runs child commands with at most `parallel` alive; returns the first
/// non-zero exit status (or 0).
int run_children(std::deque<std::vector<std::string>> jobs, int parallel) {
  int worst = 0;
  int running = 0;
  auto reap = [&]() {
    int status = 0;
    if (wait(&status) > 0) {
      --running;
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kFailure;
      if (code != 0 && worst == 0) worst = code;
    }
  };
  while (!jobs.empty() || running > 0) {
    if (!jobs.empty() && running < parallel) {
      std::vector<std::string> argv_s = std::move(jobs.front());
      jobs.pop_front();
      std::vector<char*> argv;
      for (auto& s : argv_s) argv.push_back(s.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      if (posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) {
        throw dpgan::IoError(fmt::format("cannot spawn {}", argv_s[0]));
      }
      ++running;
    } else {
      reap();
    }
  }
  return worst;
}

int cmd_sweep(const CommonArgs& args, const std::string& method_name, int parallel, const std::string& self) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::Method method = dpgan::parse_method(method_name);
  const fs::path out = ensure_dir(cfg.out_dir);
  write_text(out / "resolved_config.json", dpgan::to_json(cfg).dump(2) + "\n");

  if (parallel > 1) {
    std::deque<std::vector<std::string>> jobs;
    std::vector<fs::path> dirs;
    for (double rate : cfg.rates) {
      for (int t = 0; t < cfg.trials; ++t) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(t);
        const fs::path dir = out / "trials" / fmt::format("rate{}_seed{}", rate, seed);
        dirs.push_back(dir);
        jobs.push_back({self, "eval", "--config", fs::absolute(args.config).string(), "--method", method_name,
                        "--rate", fmt::format("{}", rate), "--seed", std::to_string(seed), "--out", dir.string()});
      }
    }
    const int code = run_children(std::move(jobs), parallel);
    std::vector<dpgan::TrialResult> results;
    for (const auto& dir : dirs) {
      if (!fs::exists(dir / "results.csv")) continue;
      for (auto& r : dpgan::read_results_csv(dir / "results.csv")) results.push_back(std::move(r));
    }
    if (!results.empty()) dpgan::emit_report(dpgan::SweepReport::aggregate(std::move(results)), out);
    return code;
  }

  const dpgan::Dataset data = load_resolved(cfg);
  std::vector<dpgan::TrialResult> partial;
  const auto persist = [&](const dpgan::TrialResult& r) {
    partial.push_back(r);
    write_text(out / "results.partial.csv", dpgan::results_csv(partial));
    std::cout << result_json(r).dump() << "\n" << std::flush;
  };
  const dpgan::SweepReport report = dpgan::run_sweep(cfg, data, method, cfg.rates, cfg.trials, persist);
  dpgan::emit_report(report, out);
  fs::remove(out / "results.partial.csv");
  return kOk;
}

int cmd_ablate(const CommonArgs& args, const std::string& axis_name) {
  dpgan::RunConfig cfg = load_config(args);
  const dpgan::AblationAxis axis = dpgan::parse_ablation_axis(axis_name);
  const dpgan::Dataset data = load_resolved(cfg);
  const fs::path out = ensure_dir(cfg.out_dir);
  const auto variants = dpgan::ablation_variants(cfg, axis);
  std::vector<dpgan::TrialResult> results;
  for (const auto& v : variants) {
    for (int t = 0; t < cfg.trials; ++t) {
      dpgan::TrialOutcome o = dpgan::run_trial(v.config, data, dpgan::Method::Dpgan, cfg.missing_rate,
                                               cfg.seed + static_cast<std::uint64_t>(t));
      o.result.method = "dpgan:" + v.label;
      std::cout << result_json(o.result).dump() << "\n" << std::flush;
      results.push_back(std::move(o.result));
      write_text(out / "results.partial.csv", dpgan::results_csv(results));
    }
  }
  dpgan::emit_report(dpgan::SweepReport::aggregate(std::move(results)), out);
  fs::remove(out / "results.partial.csv");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-path adversarial imputation of missing graph node features"};
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App* sub, bool multi_rate) {
    sub->add_option("--config", common.config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", common.seed, "Override the configured seed");
    sub->add_option("--out", common.out, "Override the output directory");
    if (multi_rate) {
      sub->add_option("--rate", common.rates, "Missing rate(s) to evaluate");
    } else {
      sub->add_option_function<double>(
          "--rate", [&](double r) { common.rates = {r}; }, "Missing rate");
    }
  };

  auto* prepare = app.add_subcommand("prepare", "Validate a config and summarize its dataset");
  add_common(prepare, false);

  std::string resume;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoint, log and config snapshot");
  add_common(train, false);
  train->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  std::string checkpoint;
  std::string mask_file;
  auto* impute = app.add_subcommand("impute", "Impute a dataset with a trained checkpoint");
  add_common(impute, false);
  impute->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  impute->add_option("--mask", mask_file, "Mask CSV (1 = observed) for a single-graph dataset")
      ->check(CLI::ExistingFile);

  std::string method = "dpgan";
  auto* eval = app.add_subcommand("eval", "Run one trial of an imputer and report test RMSE");
  add_common(eval, false);
  eval->add_option("--method", method, "mean, knn or dpgan");

  int parallel = 1;
  auto* sweep = app.add_subcommand("sweep", "Missing-rate sweep over trials");
  add_common(sweep, true);
  sweep->add_option("--method", method, "mean, knn or dpgan");
  sweep->add_option("--parallel", parallel, "Independent trial processes")->check(CLI::PositiveNumber);

  std::string axis;
  auto* ablate = app.add_subcommand("ablate", "Train every variant along one ablation axis");
  add_common(ablate, false);
  ablate->add_option("--axis", axis, "path, skip, gan, norm or hops")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; usage errors count as config errors.
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*prepare) return cmd_prepare(common);
    if (*train) return cmd_train(common, resume);
    if (*impute) return cmd_impute(common, checkpoint, mask_file);
    if (*eval) return cmd_eval(common, method);
    if (*sweep) return cmd_sweep(common, method, parallel, fs::canonical("/proc/self/exe").string());
    if (*ablate) return cmd_ablate(common, axis);
  } catch (const dpgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dpgan::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const dpgan::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const dpgan::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const dpgan::FormatError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
