#pragma once

#include "dpgan/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dpgan {

/// sqrt(mean over r == 0 of squared error). Throws ValidationError when no
/// entry is missing.
double rmse(const Matrix& x_true, const Matrix& x_imputed, const MaskMatrix& r);

/// Accumulates squared errors over several graphs for a pooled RMSE.
class RmseAccumulator {
 public:
  void add(const Matrix& x_true, const Matrix& x_imputed, const MaskMatrix& r);
  Eigen::Index count() const { return count_; }
  double value() const;

 private:
  double sum_sq_ = 0.0;
  Eigen::Index count_ = 0;
};

struct ClassifierConfig {
  int hidden_dim = 64;
  int epochs = 200;
  double lr = 0.01;
  int num_classes = 0;  // 0: max label + 1
};

/// Trains a two-layer GCN graph classifier (mean-pool readout) on the train
/// graphs and returns accuracy on the test graphs. Every graph needs a label.
double downstream_accuracy(std::span<const Graph> graphs, std::span<const int> train_ids,
                           std::span<const int> test_ids, std::uint64_t seed, const ClassifierConfig& cfg = {});

struct TrialResult {
  std::string method;
  std::string dataset;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  double rmse_norm = 0.0;
  double rmse_raw = 0.0;
  std::optional<double> alpha_final;
  double wall_time_s = 0.0;
};

struct RateGroup {
  std::string method;
  std::string dataset;
  double missing_rate = 0.0;
  int trials = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  std::optional<double> alpha_mean;
  std::optional<double> alpha_std;
};

/// Trial rows grouped by (method, dataset, missing_rate). Standard deviations
/// use the n - 1 denominator (0 for a single trial).
struct SweepReport {
  std::vector<TrialResult> results;
  std::vector<RateGroup> groups;

  static SweepReport aggregate(std::vector<TrialResult> results);
};

std::string results_csv(std::span<const TrialResult> results);
std::string summary_csv(const SweepReport& report);
std::string plot_svg(const SweepReport& report);
std::vector<TrialResult> parse_results_csv(const std::string& text);
std::vector<TrialResult> read_results_csv(const std::filesystem::path& path);

/// Writes results.csv, summary.csv and plot.svg into `dir` (created if
/// needed). Throws IoError when the directory is not writable.
void emit_report(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace dpgan
