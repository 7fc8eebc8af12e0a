#include "poesup/numerics.hpp"

#include <cmath>
#include <string>

#include "poesup/errors.hpp"

namespace poesup {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: left operand is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " but right operand is " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.rows() == 0 || b.cols() == 0) return Matrix(a.rows(), b.cols());
  if (a.cols() == 0) return Matrix::Zero(a.rows(), b.cols());
  return a * b;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  if (logits.cols() == 0) return out;
  for (Index r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double shift = row.maxCoeff();
    double sum = 0.0;
    for (Index c = 0; c < row.size(); ++c) sum += std::exp(row(c) - shift);
    const double lse = std::log(sum);
    for (Index c = 0; c < row.size(); ++c) out(r, c) = row(c) - shift - lse;
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) { return log_softmax_rows(logits).array().exp().matrix(); }

Matrix log_softmax_rows_backward(const Matrix& log_probs, const Matrix& d_out) {
  require_shape(d_out, log_probs.rows(), log_probs.cols(), "log_softmax gradient");
  const Matrix probs = log_probs.array().exp().matrix();
  const Vector row_sums = d_out.rowwise().sum();
  Matrix dx = d_out;
  for (Index r = 0; r < dx.rows(); ++r) dx.row(r) -= row_sums(r) * probs.row(r);
  return dx;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw NumericError("non-finite value in " + std::string(what) + " at (" +
                           std::to_string(r) + ", " + std::to_string(c) + ")");
      }
    }
  }
}

void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

}  // namespace poesup
