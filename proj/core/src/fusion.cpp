#include "poesup/fusion.hpp"

#include <stdexcept>

#include "poesup/errors.hpp"

namespace poesup {

FusedLogits poe_fuse(std::span<const Matrix> expert_logits) {
  if (expert_logits.empty()) throw std::invalid_argument("poe_fuse: no experts");
  const Index rows = expert_logits.front().rows();
  const Index cols = expert_logits.front().cols();
  FusedLogits out;
  Matrix sum = Matrix::Zero(rows, cols);
  for (const Matrix& z : expert_logits) {
    require_shape(z, rows, cols, "poe_fuse expert logits");
    out.expert_log_probs.push_back(log_softmax_rows(z));
    sum += out.expert_log_probs.back();
  }
  out.fused = log_softmax_rows(sum);
  return out;
}

std::vector<Matrix> poe_fuse_backward(const FusedLogits& fused, const Matrix& d_fused) {
  const Matrix d_sum = log_softmax_rows_backward(fused.fused, d_fused);
  std::vector<Matrix> grads;
  grads.reserve(fused.expert_log_probs.size());
  for (const Matrix& log_probs : fused.expert_log_probs) {
    grads.push_back(log_softmax_rows_backward(log_probs, d_sum));
  }
  return grads;
}

}  // namespace poesup
