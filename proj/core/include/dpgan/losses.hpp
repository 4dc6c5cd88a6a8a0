#pragma once

#include "dpgan/autodiff.hpp"
#include "dpgan/graph.hpp"
#include "dpgan/rng.hpp"

#include <functional>
#include <span>
#include <string_view>

namespace dpgan {

enum class ReconNorm { L1, L2 };

std::string_view to_string(ReconNorm n);
ReconNorm parse_recon_norm(std::string_view s);

struct LossConfig {
  double lambda_r = 10.0;
  double lambda_gp = 10.0;
  ReconNorm recon_norm = ReconNorm::L2;
  bool adversarial = true;  // false: pure masked regression

  void validate() const;
};

/// Masked reconstruction loss over entries with r == 0. L2 is the root of
/// the mean squared residual, L1 the mean absolute residual; 0 when nothing
/// is missing.
ad::Var reconstruction_loss(const Matrix& x, const ad::Var& x_tilde, const MaskMatrix& r, ReconNorm norm);
double reconstruction_loss(const Matrix& x, const Matrix& x_tilde, const MaskMatrix& r, ReconNorm norm);

/// A critic bound to one graph's topology: features -> scores (any length).
using CriticFn = std::function<ad::Var(const ad::Var& x)>;

/// (||grad_xhat critic_value(xhat)||_2 - 1)^2 at xhat = eps * real + (1 - eps) * fake.
/// The result stays differentiable w.r.t. the critic parameters.
ad::Var gradient_penalty(const CriticFn& critic, const Matrix& x_real, const Matrix& x_fake, double epsilon);
/// Draws eps ~ U(0, 1) from `rng`.
ad::Var gradient_penalty(const CriticFn& critic, const Matrix& x_real, const Matrix& x_fake, SplitRng& rng);

struct CriticSample {
  CriticFn critic;
  Matrix real;
  Matrix fake;
};

struct CriticLossParts {
  ad::Var total;
  double wasserstein = 0.0;  // mean critic(fake) - critic(real)
  double penalty = 0.0;      // mean gradient penalty
};

/// Mean over the batch of critic(fake) - critic(real) + lambda_gp * penalty,
/// one eps per sample drawn in order from `rng`.
CriticLossParts critic_loss_parts(std::span<const CriticSample> batch, const LossConfig& cfg, SplitRng& rng);
ad::Var critic_loss(std::span<const CriticSample> batch, const LossConfig& cfg, SplitRng& rng);

/// -critic_value(fake) + lambda_r * reconstruction_loss for one graph, where
/// fake is the composite r * x + (1 - r) * x_tilde. The adversarial term is
/// dropped when cfg.adversarial is false.
ad::Var generator_loss(const CriticFn& critic, const Matrix& x, const MaskMatrix& r, const ad::Var& x_tilde,
                       const LossConfig& cfg);

}  // namespace dpgan
