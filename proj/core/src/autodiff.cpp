#include "dpgan/autodiff.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace dpgan::ad {
namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::Node> new_node(Matrix value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows(), a.cols(),
                                      b.rows(), b.cols()));
  }
}

Matrix mask_where(const Matrix& x, auto pred, double yes, double no) {
  return x.unaryExpr([&](double v) { return pred(v) ? yes : no; });
}

}  // namespace

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw ValidationError(fmt::format("scalar(): expected 1x1, got {}x{}", rows(), cols()));
  }
  return node_->value(0, 0);
}

bool GradMode::enabled() noexcept { return g_grad_enabled; }
void GradMode::set_enabled(bool on) noexcept { g_grad_enabled = on; }

std::shared_ptr<const SparseOperator> SparseOperator::make(SparseMatrix m) {
  auto op = std::make_shared<SparseOperator>();
  op->transposed = m.transpose();
  op->forward = std::move(m);
  return op;
}

Var constant(Matrix value) { return Var(new_node(std::move(value), false)); }
Var parameter(Matrix value) { return Var(new_node(std::move(value), true)); }
Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }
Var zeros(Eigen::Index rows, Eigen::Index cols) { return constant(Matrix::Zero(rows, cols)); }
Var detach(const Var& x) { return constant(x.value()); }

Var make_op(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  const bool track = GradMode::enabled() &&
                     std::any_of(parents.begin(), parents.end(),
                                 [](const Var& p) { return p.requires_grad(); });
  auto node = new_node(std::move(value), track);
  if (track) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

std::vector<Var> grad(const Var& output, std::span<const Var> inputs, bool create_graph) {
  if (output.rows() != 1 || output.cols() != 1) {
    throw ValidationError("grad: output must be 1x1");
  }
  std::vector<Var> result;
  result.reserve(inputs.size());

  // Post-order over nodes that require grad: parents precede children.
  std::vector<detail::Node*> order;
  if (output.requires_grad()) {
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(output.node(), 0);
    visited.insert(output.node());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        detail::Node* parent = node->parents[next++].node();
        if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  // Only nodes on a path from some input to the output need backward work.
  std::unordered_set<detail::Node*> relevant;
  for (const Var& in : inputs) {
    if (in.defined()) relevant.insert(in.node());
  }
  for (detail::Node* node : order) {
    for (const Var& p : node->parents) {
      if (relevant.contains(p.node())) {
        relevant.insert(node);
        break;
      }
    }
  }

  std::unordered_map<detail::Node*, Var> grads;
  if (!order.empty() && relevant.contains(output.node())) {
    grads.emplace(output.node(), constant(Matrix::Ones(1, 1)));
    GradModeGuard mode(create_graph);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      detail::Node* node = *it;
      if (!node->backward || !relevant.contains(node)) continue;
      auto found = grads.find(node);
      if (found == grads.end()) continue;
      const Var g = found->second;
      std::vector<bool> needs(node->parents.size());
      bool any = false;
      for (std::size_t i = 0; i < needs.size(); ++i) {
        const Var& p = node->parents[i];
        needs[i] = p.requires_grad() && relevant.contains(p.node());
        any = any || needs[i];
      }
      if (!any) continue;
      std::vector<Var> parent_grads = node->backward(g, needs);
      for (std::size_t i = 0; i < needs.size(); ++i) {
        if (!needs[i] || !parent_grads[i].defined()) continue;
        detail::Node* p = node->parents[i].node();
        auto slot = grads.find(p);
        if (slot == grads.end()) {
          grads.emplace(p, parent_grads[i]);
        } else {
          slot->second = add(slot->second, parent_grads[i]);
        }
      }
    }
  }

  for (const Var& in : inputs) {
    auto found = in.defined() ? grads.find(in.node()) : grads.end();
    if (found != grads.end()) {
      result.push_back(found->second);
    } else {
      result.push_back(zeros(in.rows(), in.cols()));
    }
  }
  return result;
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError(fmt::format("matmul: inner dimension mismatch {}x{} * {}x{}", a.rows(),
                                      a.cols(), b.rows(), b.cols()));
  }
  Matrix value = a.value() * b.value();
  return make_op(std::move(value), {a, b}, [a, b](const Var& g, const std::vector<bool>& needs) {
    std::vector<Var> out(2);
    if (needs[0]) out[0] = matmul(g, transpose(b));
    if (needs[1]) out[1] = matmul(transpose(a), g);
    return out;
  });
}

Var transpose(const Var& x) {
  return make_op(x.value().transpose(), {x}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{transpose(g)};
  });
}

Var spmm(const SparseOperatorPtr& op, const Var& x) {
  if (op->forward.cols() != x.rows()) {
    throw ValidationError(fmt::format("spmm: operator is {}x{}, input has {} rows",
                                      op->forward.rows(), op->forward.cols(), x.rows()));
  }
  Matrix value = op->forward * x.value();
  return make_op(std::move(value), {x}, [op](const Var& g, const std::vector<bool>&) {
    auto back = std::make_shared<SparseOperator>();
    back->forward = op->transposed;
    back->transposed = op->forward;
    return std::vector<Var>{spmm(back, g)};
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{g, g};
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, [](const Var& g, const std::vector<bool>& needs) {
    std::vector<Var> out(2);
    out[0] = g;
    if (needs[1]) out[1] = scale(g, -1.0);
    return out;
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix value = a.value().cwiseProduct(b.value());
  return make_op(std::move(value), {a, b}, [a, b](const Var& g, const std::vector<bool>& needs) {
    std::vector<Var> out(2);
    if (needs[0]) out[0] = mul(g, b);
    if (needs[1]) out[1] = mul(g, a);
    return out;
  });
}

Var scale(const Var& x, double c) {
  return make_op(x.value() * c, {x}, [c](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{scale(g, c)};
  });
}

Var add_scalar(const Var& x, double c) {
  Matrix value = x.value().array() + c;
  return make_op(std::move(value), {x}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{g};
  });
}

Var pow(const Var& x, double p) {
  Matrix value = x.value().array().pow(p);
  return make_op(std::move(value), {x}, [x, p](const Var& g, const std::vector<bool>&) {
    if (p == 1.0) return std::vector<Var>{g};
    return std::vector<Var>{mul(g, scale(pow(x, p - 1.0), p))};
  });
}

Var pow_positive(const Var& x, double p) {
  Matrix value = x.value().unaryExpr([p](double v) { return v > 0.0 ? std::pow(v, p) : 0.0; });
  return make_op(std::move(value), {x}, [x, p](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{mul(g, scale(pow_positive(x, p - 1.0), p))};
  });
}

Var sqrt(const Var& x) { return pow_positive(x, 0.5); }

Var tanh(const Var& x) {
  Matrix value = x.value().array().tanh();
  return make_op(std::move(value), {x}, [x](const Var& g, const std::vector<bool>&) {
    const Var t = tanh(x);
    return std::vector<Var>{mul(g, add_scalar(scale(mul(t, t), -1.0), 1.0))};
  });
}

Var leaky_relu(const Var& x, double slope) {
  Matrix slope_mask = mask_where(x.value(), [](double v) { return v > 0.0; }, 1.0, slope);
  Matrix value = x.value().cwiseProduct(slope_mask);
  return make_op(std::move(value), {x},
                 [m = std::move(slope_mask)](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{mul(g, constant(m))};
                 });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var abs(const Var& x) {
  Matrix sign = mask_where(x.value(), [](double v) { return v >= 0.0; }, 1.0, -1.0);
  return make_op(x.value().cwiseAbs(), {x},
                 [s = std::move(sign)](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{mul(g, constant(s))};
                 });
}

Var clamp(const Var& x, double lo, double hi) {
  Matrix pass = mask_where(x.value(), [&](double v) { return v >= lo && v <= hi; }, 1.0, 0.0);
  Matrix value = x.value().cwiseMax(lo).cwiseMin(hi);
  return make_op(std::move(value), {x},
                 [m = std::move(pass)](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{mul(g, constant(m))};
                 });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw ValidationError("broadcast_rows: expected a 1xD row");
  Matrix value = row.value().replicate(n, 1);
  return make_op(std::move(value), {row}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{sum_rows(g)};
  });
}

Var broadcast_cols(const Var& col, Eigen::Index n) {
  if (col.cols() != 1) throw ValidationError("broadcast_cols: expected an Nx1 column");
  Matrix value = col.value().replicate(1, n);
  return make_op(std::move(value), {col}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{row_sums(g)};
  });
}

Var expand(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  Matrix value = Matrix::Constant(rows, cols, s.scalar());
  return make_op(std::move(value), {s}, [](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{sum(g)};
  });
}

Var sum_rows(const Var& x) {
  Matrix value = x.value().colwise().sum();
  const Eigen::Index n = x.rows();
  return make_op(std::move(value), {x}, [n](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{broadcast_rows(g, n)};
  });
}

Var row_sums(const Var& x) {
  Matrix value = x.value().rowwise().sum();
  const Eigen::Index n = x.cols();
  return make_op(std::move(value), {x}, [n](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{broadcast_cols(g, n)};
  });
}

Var sum(const Var& x) {
  Matrix value = Matrix::Constant(1, 1, x.value().sum());
  const Eigen::Index r = x.rows();
  const Eigen::Index c = x.cols();
  return make_op(std::move(value), {x}, [r, c](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{expand(g, r, c)};
  });
}

Var mean(const Var& x) {
  if (x.value().size() == 0) throw ValidationError("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var gather_rows(const Var& x, std::vector<int> idx) {
  Matrix value(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= x.rows()) {
      throw ValidationError(fmt::format("gather_rows: index {} out of range [0, {})", idx[t], x.rows()));
    }
    value.row(static_cast<Eigen::Index>(t)) = x.value().row(idx[t]);
  }
  const Eigen::Index n = x.rows();
  return make_op(std::move(value), {x},
                 [idx = std::move(idx), n](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{scatter_rows(g, idx, n)};
                 });
}

Var scatter_rows(const Var& x, std::vector<int> idx, Eigen::Index total_rows) {
  if (static_cast<Eigen::Index>(idx.size()) != x.rows()) {
    throw ValidationError(fmt::format("scatter_rows: {} indices for {} rows", idx.size(), x.rows()));
  }
  Matrix value = Matrix::Zero(total_rows, x.cols());
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= total_rows) {
      throw ValidationError(
          fmt::format("scatter_rows: index {} out of range [0, {})", idx[t], total_rows));
    }
    value.row(idx[t]) = x.value().row(static_cast<Eigen::Index>(t));
  }
  return make_op(std::move(value), {x},
                 [idx = std::move(idx)](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{gather_rows(g, idx)};
                 });
}

Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw ValidationError("slice_cols: range out of bounds");
  }
  Matrix value = x.value().middleCols(start, count);
  const Eigen::Index total = x.cols();
  return make_op(std::move(value), {x}, [start, total](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{embed_cols(g, start, total)};
  });
}

Var embed_cols(const Var& x, Eigen::Index start, Eigen::Index total_cols) {
  if (start < 0 || start + x.cols() > total_cols) {
    throw ValidationError("embed_cols: range out of bounds");
  }
  Matrix value = Matrix::Zero(x.rows(), total_cols);
  value.middleCols(start, x.cols()) = x.value();
  const Eigen::Index count = x.cols();
  return make_op(std::move(value), {x}, [start, count](const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{slice_cols(g, start, count)};
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw ValidationError("concat_cols: row count mismatch");
  Matrix value(a.rows(), a.cols() + b.cols());
  value << a.value(), b.value();
  const Eigen::Index ca = a.cols();
  const Eigen::Index cb = b.cols();
  return make_op(std::move(value), {a, b},
                 [ca, cb](const Var& g, const std::vector<bool>& needs) {
                   std::vector<Var> out(2);
                   if (needs[0]) out[0] = slice_cols(g, 0, ca);
                   if (needs[1]) out[1] = slice_cols(g, ca, cb);
                   return out;
                 });
}

Var softmax_cross_entropy(const Var& logits, int label) {
  if (logits.rows() != 1 || label < 0 || label >= logits.cols()) {
    throw ValidationError("softmax_cross_entropy: expected a 1xC row and a label in range");
  }
  const Eigen::RowVectorXd z = logits.value().row(0);
  const double shift = z.maxCoeff();
  const Eigen::RowVectorXd e = (z.array() - shift).exp();
  const double total = e.sum();
  const double loss = -(z(label) - shift - std::log(total));
  Matrix delta = e / total;
  delta(0, label) -= 1.0;
  return make_op(Matrix::Constant(1, 1, loss), {logits},
                 [d = std::move(delta)](const Var& g, const std::vector<bool>&) {
                   return std::vector<Var>{mul(expand(g, 1, d.cols()), constant(d))};
                 });
}

}  // namespace dpgan::ad
