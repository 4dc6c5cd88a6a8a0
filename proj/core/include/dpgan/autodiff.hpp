#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every op's backward rule is itself written with differentiable ops, so
// `grad(..., create_graph=true)` returns gradients that can be differentiated
// again (needed for the gradient penalty of the critic).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace dpgan::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class Var;

using BackwardFn = std::function<std::vector<Var>(const Var& grad, const std::vector<bool>& needs)>;

namespace detail {
struct Node {
  Matrix value;
  bool requires_grad = false;
  std::vector<Var> parents;
  BackwardFn backward;
};
}  // namespace detail

/// Handle to a node of the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Mutable access for optimizers; never call on a node with parents.
  Matrix& mutable_value() { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const;
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  detail::Node* node() const noexcept { return node_.get(); }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Thread-local switch controlling whether ops record the graph.
class GradMode {
 public:
  static bool enabled() noexcept;
  static void set_enabled(bool on) noexcept;
};

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled) : previous_(GradMode::enabled()) { GradMode::set_enabled(enabled); }
  ~GradModeGuard() { GradMode::set_enabled(previous_); }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

struct NoGradGuard : GradModeGuard {
  NoGradGuard() : GradModeGuard(false) {}
};

/// Sparse linear operator with its transpose cached for the backward pass.
struct SparseOperator {
  SparseMatrix forward;
  SparseMatrix transposed;
  static std::shared_ptr<const SparseOperator> make(SparseMatrix m);
};
using SparseOperatorPtr = std::shared_ptr<const SparseOperator>;

// Leaves.
Var constant(Matrix value);
Var parameter(Matrix value);
Var scalar_constant(double v);
Var zeros(Eigen::Index rows, Eigen::Index cols);
Var detach(const Var& x);

/// Generic op construction: records parents and the backward rule only when
/// grad mode is on and some parent requires a gradient.
Var make_op(Matrix value, std::vector<Var> parents, BackwardFn backward);

/// Gradients of the 1x1 `output` w.r.t. each of `inputs`. Inputs the output
/// does not depend on get zero matrices. With `create_graph` the returned
/// gradients are themselves differentiable.
std::vector<Var> grad(const Var& output, std::span<const Var> inputs, bool create_graph = false);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var spmm(const SparseOperatorPtr& op, const Var& x);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var pow(const Var& x, double p);
/// x^p where x > 0 and 0 elsewhere, derivative included; sqrt uses it so
/// the gradient at 0 is the zero subgradient instead of inf * 0.
Var pow_positive(const Var& x, double p);
Var sqrt(const Var& x);
Var tanh(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var relu(const Var& x);
Var abs(const Var& x);
Var clamp(const Var& x, double lo, double hi);

// Broadcasting and reductions.
Var broadcast_rows(const Var& row, Eigen::Index n);  // 1xD -> NxD
Var broadcast_cols(const Var& col, Eigen::Index n);  // Nx1 -> NxD
Var expand(const Var& s, Eigen::Index rows, Eigen::Index cols);  // 1x1 -> RxC
Var sum_rows(const Var& x);  // NxD -> 1xD (column totals)
Var row_sums(const Var& x);  // NxD -> Nx1
Var sum(const Var& x);       // -> 1x1
Var mean(const Var& x);      // -> 1x1

// Indexing.
Var gather_rows(const Var& x, std::vector<int> idx);
Var scatter_rows(const Var& x, std::vector<int> idx, Eigen::Index total_rows);
Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count);
Var embed_cols(const Var& x, Eigen::Index start, Eigen::Index total_cols);
Var concat_cols(const Var& a, const Var& b);

/// Mean softmax cross-entropy of a 1xC logit row against `label`.
/// First-order only: its backward treats the softmax as a constant.
Var softmax_cross_entropy(const Var& logits, int label);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double c, const Var& x) { return scale(x, c); }

}  // namespace dpgan::ad
