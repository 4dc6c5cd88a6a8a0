#pragma once

#include "dpgan/losses.hpp"
#include "dpgan/optim.hpp"

namespace dpgan {

/// Two time-scale update rule: separate learning rates for the critic and the
/// generator instead of many critic steps per generator step.
struct TTURConfig {
  double lr_d = 0.04;
  double lr_g = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int d_steps_per_g = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

struct TrainConfig {
  LossConfig loss;
  TTURConfig ttur;
  int epochs = 200;
  int batch_size = 128;
  int patience = 50;          // early stopping on validation RMSE; <= 0 disables
  double missing_rate = 0.1;  // simulated missingness on training graphs
  bool critic_sees_mask = false;
  bool critic_on_composite = true;  // false: the critic judges the raw generator output
  bool freeze_critic = false;

  void validate() const;
};

}  // namespace dpgan
