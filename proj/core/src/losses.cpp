#include "dpgan/losses.hpp"

#include "dpgan/discriminator.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/generator.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dpgan {

std::string_view to_string(ReconNorm n) { return n == ReconNorm::L1 ? "L1" : "L2"; }

ReconNorm parse_recon_norm(std::string_view s) {
  if (s == "L1" || s == "l1") return ReconNorm::L1;
  if (s == "L2" || s == "l2") return ReconNorm::L2;
  throw ValidationError(fmt::format("unknown reconstruction norm '{}'", s));
}

void LossConfig::validate() const {
  if (!(lambda_gp > 0.0)) throw ValidationError("lambda_gp must be > 0");
  if (!(lambda_r >= 0.0)) throw ValidationError("lambda_r must be >= 0");
}

ad::Var reconstruction_loss(const Matrix& x, const ad::Var& x_tilde, const MaskMatrix& r, ReconNorm norm) {
  if (x.rows() != x_tilde.rows() || x.cols() != x_tilde.cols() || x.rows() != r.rows() || x.cols() != r.cols()) {
    throw ValidationError("reconstruction_loss: shape mismatch");
  }
  const Eigen::Index missing = r.missing_count();
  if (missing == 0) return ad::scalar_constant(0.0);
  const Matrix miss = Matrix::Ones(r.rows(), r.cols()) - r.entries();
  const ad::Var residual = ad::mul(ad::sub(x_tilde, ad::constant(x)), ad::constant(miss));
  const double inv = 1.0 / static_cast<double>(missing);
  if (norm == ReconNorm::L1) return ad::scale(ad::sum(ad::abs(residual)), inv);
  return ad::sqrt(ad::scale(ad::sum(ad::mul(residual, residual)), inv));
}

double reconstruction_loss(const Matrix& x, const Matrix& x_tilde, const MaskMatrix& r, ReconNorm norm) {
  ad::NoGradGuard no_grad;
  return reconstruction_loss(x, ad::constant(x_tilde), r, norm).scalar();
}

ad::Var gradient_penalty(const CriticFn& critic, const Matrix& x_real, const Matrix& x_fake, double epsilon) {
  if (x_real.rows() != x_fake.rows() || x_real.cols() != x_fake.cols()) {
    throw ValidationError("gradient_penalty: real/fake shape mismatch");
  }
  const ad::Var x_hat = ad::parameter(epsilon * x_real + (1.0 - epsilon) * x_fake);
  ad::Var value;
  {
    ad::GradModeGuard on(true);
    value = critic_value(critic(x_hat));
  }
  const ad::Var inputs[] = {x_hat};
  const ad::Var g = ad::grad(value, inputs, /*create_graph=*/true)[0];
  const ad::Var norm = ad::sqrt(ad::sum(ad::mul(g, g)));
  const ad::Var dev = ad::add_scalar(norm, -1.0);
  return ad::mul(dev, dev);
}

ad::Var gradient_penalty(const CriticFn& critic, const Matrix& x_real, const Matrix& x_fake, SplitRng& rng) {
  return gradient_penalty(critic, x_real, x_fake, rng.uniform());
}

CriticLossParts critic_loss_parts(std::span<const CriticSample> batch, const LossConfig& cfg, SplitRng& rng) {
  if (batch.empty()) throw ValidationError("critic_loss: empty batch");
  CriticLossParts parts;
  ad::Var total;
  for (const auto& s : batch) {
    const ad::Var fake = critic_value(s.critic(ad::constant(s.fake)));
    const ad::Var real = critic_value(s.critic(ad::constant(s.real)));
    const ad::Var gp = gradient_penalty(s.critic, s.real, s.fake, rng);
    parts.wasserstein += fake.scalar() - real.scalar();
    parts.penalty += gp.scalar();
    const ad::Var term = ad::add(ad::sub(fake, real), ad::scale(gp, cfg.lambda_gp));
    total = total.defined() ? ad::add(total, term) : term;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  parts.total = ad::scale(total, inv);
  parts.wasserstein *= inv;
  parts.penalty *= inv;
  return parts;
}

ad::Var critic_loss(std::span<const CriticSample> batch, const LossConfig& cfg, SplitRng& rng) {
  return critic_loss_parts(batch, cfg, rng).total;
}

ad::Var generator_loss(const CriticFn& critic, const Matrix& x, const MaskMatrix& r, const ad::Var& x_tilde,
                       const LossConfig& cfg) {
  ad::Var loss = ad::scale(reconstruction_loss(x, x_tilde, r, cfg.recon_norm), cfg.lambda_r);
  if (cfg.adversarial) {
    const ad::Var fake = compose_imputation(x, r, x_tilde);
    loss = ad::sub(loss, critic_value(critic(fake)));
  }
  return loss;
}

}  // namespace dpgan
