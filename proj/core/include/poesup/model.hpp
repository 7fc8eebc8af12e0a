#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poesup/numerics.hpp"
#include "poesup/rng.hpp"

namespace poesup {

struct FfnHeadShape {
  Index in_dim = 0;
  Index hidden = 256;
  Index out = 2;
  /// Width of the contrastive projection taken from the hidden layer; 0 = none.
  Index projection = 0;
};

/// Linear(in -> hidden) -> ReLU -> Linear(hidden -> out), plus an optional
/// linear projection of the hidden activations used for contrastive training.
///
/// Weights are stored input-major (x * w1), biases as 1 x n rows.
struct FfnHead {
  std::string name;
  Matrix w1, b1, w2, b2;
  Matrix wp, bp;

  static constexpr std::array<std::string_view, 6> kParamNames = {"w1", "b1", "w2", "b2", "wp", "bp"};

  /// All parameters zero.
  static FfnHead zeros(std::string name, const FfnHeadShape& shape);
  /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
  static FfnHead he_init(std::string name, const FfnHeadShape& shape, Rng& rng);

  Index in_dim() const { return w1.rows(); }
  Index hidden() const { return w1.cols(); }
  Index out_dim() const { return w2.cols(); }
  Index projection_dim() const { return wp.cols(); }
  bool has_projection() const { return wp.size() > 0; }

  std::array<Matrix*, 6> params() { return {&w1, &b1, &w2, &b2, &wp, &bp}; }
  std::array<const Matrix*, 6> params() const { return {&w1, &b1, &w2, &b2, &wp, &bp}; }
};

struct FfnCache {
  Matrix input;
  Matrix pre_activation;
  Matrix hidden;
};

struct FfnForward {
  Matrix logits;
  FfnCache cache;
};

struct FfnGradients {
  Matrix w1, b1, w2, b2, wp, bp;
  Matrix input;

  std::array<const Matrix*, 6> params() const { return {&w1, &b1, &w2, &b2, &wp, &bp}; }
};

/// logits = ReLU(x w1 + b1) w2 + b2. Throws ShapeError if x.cols() != in_dim.
FfnForward ffn_forward(const FfnHead& head, const Matrix& x);

/// Unnormalized projection hidden * wp + bp. Requires has_projection().
Matrix ffn_project(const FfnHead& head, const FfnCache& cache);

/// Backward pass. `d_projection` (batch x projection_dim) is optional; when null
/// the projection receives zero gradients of its own shape.
FfnGradients ffn_backward(const FfnHead& head, const FfnCache& cache, const Matrix& d_logits,
                          const Matrix* d_projection = nullptr);

/// Concatenates parameter tensors into one vector, row-major, in order.
std::vector<double> flatten(std::span<const Matrix* const> tensors);
/// Inverse of flatten; sizes must match exactly.
void unflatten(std::span<const double> values, std::span<Matrix* const> tensors);

}  // namespace poesup
