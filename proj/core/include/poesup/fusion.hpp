#pragma once

#include <span>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

/// Product-of-Experts fusion in log space.
struct FusedLogits {
  /// log_softmax of each expert's logits.
  std::vector<Matrix> expert_log_probs;
  /// log_softmax(sum of expert_log_probs): the renormalized product distribution.
  Matrix fused;
};

/// Treats each expert's logits as a class distribution, multiplies the
/// distributions (sums log-probabilities) and renormalizes.
/// Throws std::invalid_argument for an empty list, ShapeError on mismatched shapes.
FusedLogits poe_fuse(std::span<const Matrix> expert_logits);

/// Gradient w.r.t. each expert's raw logits, given d loss / d fused.
std::vector<Matrix> poe_fuse_backward(const FusedLogits& fused, const Matrix& d_fused);

}  // namespace poesup
