#include "poesup/adam.hpp"

#include <cmath>

#include "poesup/errors.hpp"

namespace poesup {

void adam_step(std::span<const ParamSlot> params, AdamState& state, const AdamOptions& opt) {
  for (const ParamSlot& p : params) {
    require_shape(*p.grad, p.value->rows(), p.value->cols(), "adam_step gradient for '" + p.name + "'");
    if (!p.grad->allFinite()) throw NumericError("adam_step: non-finite gradient for parameter '" + p.name + "'");
  }
  if (state.step == 0) {
    state.m.clear();
    state.v.clear();
    for (const ParamSlot& p : params) {
      state.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      state.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                     " tensors but " + std::to_string(params.size()) + " were passed");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(opt.beta1, t);
  const double bias2 = 1.0 - std::pow(opt.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i].value;
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    require_shape(m, theta.rows(), theta.cols(), "adam_step state for '" + params[i].name + "'");
    for (Index k = 0; k < theta.size(); ++k) {
      double g = params[i].grad->data()[k];
      if (!opt.decoupled_l2) g += opt.l2 * theta.data()[k];
      m.data()[k] = opt.beta1 * m.data()[k] + (1.0 - opt.beta1) * g;
      v.data()[k] = opt.beta2 * v.data()[k] + (1.0 - opt.beta2) * g * g;
      const double m_hat = m.data()[k] / bias1;
      const double v_hat = v.data()[k] / bias2;
      double update = opt.lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
      if (opt.decoupled_l2) update += opt.lr * opt.l2 * theta.data()[k];
      theta.data()[k] -= update;
    }
  }
}

}  // namespace poesup
