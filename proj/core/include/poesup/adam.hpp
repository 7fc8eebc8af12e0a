#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

struct AdamOptions {
  double lr = 1e-5;
  double l2 = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// false: coupled L2 (l2 * theta added to the gradient).
  /// true: decoupled weight decay (theta -= lr * l2 * theta after the Adam update).
  bool decoupled_l2 = false;
};

/// First/second moments per parameter tensor, sized lazily on the first step.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

struct ParamSlot {
  std::string name;
  Matrix* value = nullptr;
  const Matrix* grad = nullptr;
};

/// One bias-corrected Adam update of every slot.
///
/// Validates all gradients before touching any parameter: a non-finite
/// gradient throws NumericError naming the tensor, a shape mismatch throws
/// ShapeError. The slot list must keep the same order and shapes across steps.
void adam_step(std::span<const ParamSlot> params, AdamState& state, const AdamOptions& opt);

}  // namespace poesup
