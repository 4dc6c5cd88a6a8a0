#pragma once

#include "dpgan/archive.hpp"
#include "dpgan/autodiff.hpp"
#include "dpgan/rng.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dpgan {

/// Ordered, named collection of learnable leaves. Models register their
/// parameters once; optimizers and checkpoints iterate in registration order.
class ParameterSet {
 public:
  void add(std::string name, ad::Var var);

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, ad::Var>>& entries() const { return entries_; }
  std::vector<ad::Var> vars() const;
  ad::Var get(const std::string& name) const;
  std::size_t scalar_count() const;

  using Snapshot = std::map<std::string, Eigen::MatrixXd>;
  Snapshot snapshot() const;
  /// Copies values in; every registered name must be present with the same shape.
  void restore(const Snapshot& values);

  void save(TensorArchive& archive, const std::string& prefix) const;
  void load(const TensorArchive& archive, const std::string& prefix);

 private:
  std::vector<std::pair<std::string, ad::Var>> entries_;
};

/// Glorot-uniform initialized `rows x cols` parameter.
ad::Var glorot(Eigen::Index rows, Eigen::Index cols, SplitRng& rng);
ad::Var zero_parameter(Eigen::Index rows, Eigen::Index cols);

}  // namespace dpgan
