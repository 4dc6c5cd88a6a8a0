#include "oracles.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dpgan {
namespace {

namespace fs = std::filesystem;
using testing::random_matrix;

TEST(Eval, RmseExamples) {
  const Matrix x = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  const MaskMatrix r((Matrix(2, 2) << 1, 0, 0, 1).finished());
  EXPECT_EQ(rmse(x, x, r), 0.0);

  Matrix y = x;
  y(0, 1) += 0.5;
  const MaskMatrix one((Matrix(2, 2) << 1, 0, 1, 1).finished());
  EXPECT_DOUBLE_EQ(rmse(x, y, one), 0.5);
  EXPECT_THROW(rmse(x, y, MaskMatrix::ones(2, 2)), ValidationError);
  EXPECT_THROW(rmse(x, Matrix::Zero(3, 2), r), ValidationError);
}

TEST(Eval, RmseMatchesLoopOracle) {
  SplitRng rng(1);
  const Matrix x = random_matrix(3, 3, rng);
  const Matrix y = random_matrix(3, 3, rng);
  const MaskMatrix r((Matrix(3, 3) << 0, 1, 0, 1, 1, 0, 0, 1, 1).finished());
  EXPECT_NEAR(rmse(x, y, r), testing::masked_rms_oracle(x, y, r.entries()), 1e-15);
}

TEST(EvalProperty, RmseIgnoresObservedPositions) {
  SplitRng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_matrix(5, 4, rng);
    const Matrix y = random_matrix(5, 4, rng);
    Matrix rm = sample_mask(5, 4, 0.5, static_cast<std::uint64_t>(t)).entries();
    rm(0, 0) = 0.0;
    const MaskMatrix r(rm);
    const Matrix noise = random_matrix(5, 4, rng).cwiseProduct(rm);
    EXPECT_EQ(rmse(x, y + noise, r), rmse(x, y, r));
    EXPECT_GE(rmse(x, y, r), 0.0);
  }
}

TEST(Eval, AccumulatorPoolsEntries) {
  SplitRng rng(3);
  RmseAccumulator acc;
  double sum = 0.0;
  int count = 0;
  for (int g = 0; g < 4; ++g) {
    const Matrix x = random_matrix(3 + g, 2, rng);
    const Matrix y = random_matrix(3 + g, 2, rng);
    Matrix rm = sample_mask(3 + g, 2, 0.5, static_cast<std::uint64_t>(g)).entries();
    rm(0, 0) = 0.0;
    acc.add(x, y, MaskMatrix(rm));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        if (rm(i, j) == 0.0) {
          sum += (x(i, j) - y(i, j)) * (x(i, j) - y(i, j));
          ++count;
        }
      }
    }
  }
  EXPECT_EQ(acc.count(), count);
  EXPECT_NEAR(acc.value(), std::sqrt(sum / count), 1e-15);
  EXPECT_THROW(RmseAccumulator().value(), ValidationError);
}

TrialResult row(std::string method, double rate, std::uint64_t seed, double rmse_v, std::optional<double> alpha = {}) {
  TrialResult r;
  r.method = std::move(method);
  r.dataset = "synthetic";
  r.missing_rate = rate;
  r.seed = seed;
  r.rmse_norm = rmse_v;
  r.rmse_raw = 2.0 * rmse_v;
  r.alpha_final = alpha;
  r.wall_time_s = 0.125;
  return r;
}

TEST(Eval, AggregateMatchesRawRows) {
  std::vector<TrialResult> rows;
  SplitRng rng(4);
  for (double rate : {0.1, 0.5}) {
    for (std::uint64_t s = 0; s < 5; ++s) rows.push_back(row("dpgan", rate, s, rng.uniform(0.1, 0.3), rng.uniform()));
  }
  const SweepReport rep = SweepReport::aggregate(rows);
  ASSERT_EQ(rep.groups.size(), 2u);
  for (const RateGroup& g : rep.groups) {
    std::vector<double> v, a;
    for (const auto& r : rows) {
      if (r.missing_rate == g.missing_rate) {
        v.push_back(r.rmse_norm);
        a.push_back(*r.alpha_final);
      }
    }
    const auto stats = [](const std::vector<double>& xs) {
      const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - m) * (x - m);
      return std::pair{m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
    };
    EXPECT_EQ(g.trials, 5);
    EXPECT_NEAR(g.rmse_mean, stats(v).first, 1e-12);
    EXPECT_NEAR(g.rmse_std, stats(v).second, 1e-12);
    ASSERT_TRUE(g.alpha_mean.has_value());
    EXPECT_NEAR(*g.alpha_mean, stats(a).first, 1e-12);
    EXPECT_NEAR(*g.alpha_std, stats(a).second, 1e-12);
  }
}

TEST(Eval, SingleTrialHasZeroStd) {
  const SweepReport rep = SweepReport::aggregate({row("mean", 0.3, 0, 0.2)});
  ASSERT_EQ(rep.groups.size(), 1u);
  EXPECT_EQ(rep.groups[0].rmse_std, 0.0);
  EXPECT_FALSE(rep.groups[0].alpha_mean.has_value());
}

int line_count(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

TEST(Eval, CsvShapesAndRoundTrip) {
  const std::vector<TrialResult> one{row("knn", 0.1, 3, 0.25)};
  EXPECT_EQ(line_count(results_csv(one)), 2);

  std::vector<TrialResult> rows;
  for (double rate : {0.1, 0.99}) {
    for (std::uint64_t s = 0; s < 5; ++s) rows.push_back(row("dpgan", rate, s, 0.1 + 0.01 * static_cast<double>(s), 0.5));
  }
  const std::string text = results_csv(rows);
  EXPECT_EQ(line_count(text), 11);
  const SweepReport rep = SweepReport::aggregate(rows);
  EXPECT_EQ(line_count(summary_csv(rep)), 3);

  const std::vector<TrialResult> parsed = parse_results_csv(text);
  ASSERT_EQ(parsed.size(), rows.size());
  EXPECT_EQ(results_csv(parsed), text);
  EXPECT_EQ(summary_csv(SweepReport::aggregate(parsed)), summary_csv(rep));
  EXPECT_THROW(parse_results_csv("bogus\n"), FormatError);
}

TEST(Eval, EmitReportWritesThreeFiles) {
  const fs::path dir = fs::temp_directory_path() / "dpgan_emit_report";
  fs::remove_all(dir);
  const SweepReport rep = SweepReport::aggregate({row("mean", 0.1, 0, 0.3), row("mean", 0.1, 1, 0.4)});
  emit_report(rep, dir);
  for (const char* f : {"results.csv", "summary.csv", "plot.svg"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(read_results_csv(dir / "results.csv").size(), 2u);
  std::ifstream svg(dir / "plot.svg");
  std::stringstream ss;
  ss << svg.rdbuf();
  EXPECT_NE(ss.str().find("<svg"), std::string::npos);

  const fs::path blocker = fs::temp_directory_path() / "dpgan_emit_blocker";
  fs::remove_all(blocker);
  std::ofstream(blocker) << "file";
  EXPECT_THROW(emit_report(rep, blocker / "sub"), IoError);
}

std::vector<Graph> labelled_graphs(int n, bool informative, std::uint64_t seed) {
  std::vector<Graph> out;
  SplitRng rng(seed);
  for (int i = 0; i < n; ++i) {
    Graph g = testing::random_graph(6, 0.5, 3, seed + static_cast<std::uint64_t>(i));
    const int label = informative ? i % 2 : 0;
    if (informative) g.node_features.col(0).array() += label == 1 ? 2.0 : -2.0;
    g.graph_label = label;
    out.push_back(std::move(g));
  }
  return out;
}

TEST(Eval, DownstreamConstantLabelsIsPerfect) {
  const auto graphs = labelled_graphs(10, false, 1);
  const std::vector<int> train{0, 1, 2, 3, 4, 5, 6};
  const std::vector<int> test{7, 8, 9};
  ClassifierConfig cfg;
  cfg.num_classes = 2;
  cfg.epochs = 20;
  EXPECT_EQ(downstream_accuracy(graphs, train, test, 1, cfg), 1.0);
  cfg.num_classes = 0;
  EXPECT_THROW(downstream_accuracy(graphs, train, test, 1, cfg), ValidationError);
}

TEST(Eval, DownstreamLearnsInformativeFeatures) {
  const auto graphs = labelled_graphs(40, true, 2);
  std::vector<int> train(30), test(10);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), 30);
  ClassifierConfig cfg;
  cfg.hidden_dim = 16;
  cfg.epochs = 100;
  EXPECT_GT(downstream_accuracy(graphs, train, test, 3, cfg), 0.5);
}

TEST(Eval, RunSweepProducesOneRowPerTrial) {
  SyntheticSpec spec;
  spec.num_graphs = 12;
  spec.num_nodes = 6;
  spec.num_features = 3;
  const Dataset ds{"synthetic", make_smooth_signal_graphs(spec, 1), false};
  RunConfig cfg;
  const SweepReport rep = run_sweep(cfg, ds, Method::Mean, {0.1}, 1);
  ASSERT_EQ(rep.results.size(), 1u);
  EXPECT_EQ(rep.groups.size(), 1u);
  EXPECT_EQ(rep.results[0].method, "mean");
  EXPECT_GT(rep.results[0].rmse_norm, 0.0);
}

}  // namespace
}  // namespace dpgan
