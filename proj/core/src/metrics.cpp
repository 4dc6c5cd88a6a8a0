#include "dpgan/eval.hpp"

#include "dpgan/errors.hpp"

#include <cmath>

namespace dpgan {

double rmse(const Matrix& x_true, const Matrix& x_imputed, const MaskMatrix& r) {
  RmseAccumulator acc;
  acc.add(x_true, x_imputed, r);
  return acc.value();
}

void RmseAccumulator::add(const Matrix& x_true, const Matrix& x_imputed, const MaskMatrix& r) {
  if (x_true.rows() != x_imputed.rows() || x_true.cols() != x_imputed.cols() || x_true.rows() != r.rows() ||
      x_true.cols() != r.cols()) {
    throw ValidationError("rmse: shape mismatch");
  }
  for (Eigen::Index i = 0; i < x_true.rows(); ++i) {
    for (Eigen::Index j = 0; j < x_true.cols(); ++j) {
      if (r.observed(i, j)) continue;
      const double e = x_imputed(i, j) - x_true(i, j);
      sum_sq_ += e * e;
      ++count_;
    }
  }
}

double RmseAccumulator::value() const {
  if (count_ == 0) throw ValidationError("rmse: no missing entries, metric undefined");
  return std::sqrt(sum_sq_ / static_cast<double>(count_));
}

}  // namespace dpgan
