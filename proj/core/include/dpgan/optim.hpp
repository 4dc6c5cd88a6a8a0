#pragma once

#include "dpgan/archive.hpp"
#include "dpgan/autodiff.hpp"
#include "dpgan/params.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpgan {

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order optimizer over a fixed ParameterSet. Moments are kept per
/// parameter in registration order.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const ParameterSet& params);

  /// `grads[i]` is the gradient of parameter i (same order as the set).
  void step(std::span<const ad::Var> grads);
  std::int64_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

  void save(TensorArchive& archive, const std::string& prefix) const;
  void load(const TensorArchive& archive, const std::string& prefix);

 private:
  OptimizerConfig config_;
  std::vector<ad::Var> params_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  std::int64_t steps_ = 0;
};

}  // namespace dpgan
