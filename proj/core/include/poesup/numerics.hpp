#pragma once

#include <Eigen/Core>

#include <string_view>

namespace poesup {

/// Dense row-major matrix of doubles. All training math runs in 64-bit.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Row-major single-precision storage used for embeddings on disk and in memory.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// a * b. Throws ShapeError when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// Row-wise numerically stable log-softmax.
Matrix log_softmax_rows(const Matrix& logits);

/// Row-wise softmax, computed through log_softmax_rows.
Matrix softmax_rows(const Matrix& logits);

/// Backward of log_softmax_rows given its output: dx = dy - softmax * rowsum(dy).
Matrix log_softmax_rows_backward(const Matrix& log_probs, const Matrix& d_out);

bool all_finite(const Matrix& m);

/// Throws NumericError naming `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

/// Throws ShapeError naming `what` unless m is rows x cols.
void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what);

}  // namespace poesup
