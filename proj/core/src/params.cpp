#include "dpgan/params.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dpgan {

void ParameterSet::add(std::string name, ad::Var var) {
  for (const auto& [existing, _] : entries_) {
    if (existing == name) throw ValidationError(fmt::format("duplicate parameter name '{}'", name));
  }
  if (!var.requires_grad()) throw ValidationError(fmt::format("'{}' is not a parameter leaf", name));
  entries_.emplace_back(std::move(name), std::move(var));
}

std::vector<ad::Var> ParameterSet::vars() const {
  std::vector<ad::Var> out;
  out.reserve(entries_.size());
  for (const auto& [_, v] : entries_) out.push_back(v);
  return out;
}

ad::Var ParameterSet::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw ValidationError(fmt::format("unknown parameter '{}'", name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [_, v] : entries_) total += static_cast<std::size_t>(v.value().size());
  return total;
}

ParameterSet::Snapshot ParameterSet::snapshot() const {
  Snapshot out;
  for (const auto& [n, v] : entries_) out.emplace(n, v.value());
  return out;
}

void ParameterSet::restore(const Snapshot& values) {
  for (auto& [n, v] : entries_) {
    auto it = values.find(n);
    if (it == values.end()) throw FormatError(fmt::format("missing parameter '{}'", n));
    if (it->second.rows() != v.rows() || it->second.cols() != v.cols()) {
      throw FormatError(fmt::format("parameter '{}' has shape {}x{}, expected {}x{}", n, it->second.rows(),
                                    it->second.cols(), v.rows(), v.cols()));
    }
    v.mutable_value() = it->second;
  }
}

void ParameterSet::save(TensorArchive& archive, const std::string& prefix) const {
  for (const auto& [n, v] : entries_) archive.put(prefix + n, v.value());
}

void ParameterSet::load(const TensorArchive& archive, const std::string& prefix) {
  Snapshot values;
  for (const auto& [n, _] : entries_) values.emplace(n, archive.matrix(prefix + n));
  restore(values);
}

ad::Var glorot(Eigen::Index rows, Eigen::Index cols, SplitRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
  }
  return ad::parameter(std::move(w));
}

ad::Var zero_parameter(Eigen::Index rows, Eigen::Index cols) {
  return ad::parameter(Eigen::MatrixXd::Zero(rows, cols));
}

}  // namespace dpgan
