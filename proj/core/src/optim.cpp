#include "dpgan/optim.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dpgan {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw ValidationError(fmt::format("unknown optimizer '{}'", s));
}

Optimizer::Optimizer(OptimizerConfig config, const ParameterSet& params)
    : config_(config), params_(params.vars()) {
  if (!(config_.lr >= 0.0)) throw ValidationError("optimizer: learning rate must be >= 0");
  for (const auto& p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
  }
}

void Optimizer::step(std::span<const ad::Var> grads) {
  if (grads.size() != params_.size()) throw ValidationError("optimizer: gradient count mismatch");
  ++steps_;
  const double lr = config_.lr;
  if (config_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].mutable_value() -= lr * grads[i].value();
    return;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Eigen::MatrixXd& g = grads[i].value();
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseAbs2();
    const Eigen::ArrayXXd denom = (v_[i].array() / c2).sqrt() + config_.eps;
    params_[i].mutable_value().array() -= lr * (m_[i].array() / c1) / denom;
  }
}

void Optimizer::save(TensorArchive& archive, const std::string& prefix) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    archive.put(fmt::format("{}m.{:04}", prefix, i), m_[i]);
    archive.put(fmt::format("{}v.{:04}", prefix, i), v_[i]);
  }
  archive.put(prefix + "steps", Eigen::MatrixXd::Constant(1, 1, static_cast<double>(steps_)));
}

void Optimizer::load(const TensorArchive& archive, const std::string& prefix) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = archive.matrix(fmt::format("{}m.{:04}", prefix, i));
    v_[i] = archive.matrix(fmt::format("{}v.{:04}", prefix, i));
    if (m_[i].rows() != params_[i].rows() || m_[i].cols() != params_[i].cols()) {
      throw FormatError(fmt::format("optimizer state {} has the wrong shape", i));
    }
  }
  steps_ = static_cast<std::int64_t>(archive.matrix(prefix + "steps")(0, 0));
}

}  // namespace dpgan
