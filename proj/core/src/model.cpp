#include "poesup/model.hpp"

#include <cmath>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

void he_fill(Matrix& w, Rng& rng) {
  const double stddev = w.rows() > 0 ? std::sqrt(2.0 / static_cast<double>(w.rows())) : 0.0;
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
}

}  // namespace

FfnHead FfnHead::zeros(std::string name, const FfnHeadShape& shape) {
  if (shape.in_dim <= 0 || shape.hidden <= 0 || shape.out <= 0 || shape.projection < 0) {
    throw ShapeError("FfnHead '" + name + "': dims must be positive");
  }
  FfnHead head;
  head.name = std::move(name);
  head.w1 = Matrix::Zero(shape.in_dim, shape.hidden);
  head.b1 = Matrix::Zero(1, shape.hidden);
  head.w2 = Matrix::Zero(shape.hidden, shape.out);
  head.b2 = Matrix::Zero(1, shape.out);
  head.wp = Matrix::Zero(shape.hidden, shape.projection);
  head.bp = Matrix::Zero(1, shape.projection);
  if (shape.projection == 0) {
    head.wp.resize(0, 0);
    head.bp.resize(0, 0);
  }
  return head;
}

FfnHead FfnHead::he_init(std::string name, const FfnHeadShape& shape, Rng& rng) {
  FfnHead head = zeros(std::move(name), shape);
  he_fill(head.w1, rng);
  he_fill(head.w2, rng);
  if (head.has_projection()) he_fill(head.wp, rng);
  return head;
}

FfnForward ffn_forward(const FfnHead& head, const Matrix& x) {
  if (x.cols() != head.in_dim()) {
    throw ShapeError("ffn_forward '" + head.name + "': input has " + std::to_string(x.cols()) +
                     " columns, head expects " + std::to_string(head.in_dim()));
  }
  FfnForward out;
  out.cache.input = x;
  out.cache.pre_activation = matmul(x, head.w1);
  out.cache.pre_activation.rowwise() += head.b1.row(0);
  out.cache.hidden = out.cache.pre_activation.cwiseMax(0.0);
  out.logits = matmul(out.cache.hidden, head.w2);
  out.logits.rowwise() += head.b2.row(0);
  return out;
}

Matrix ffn_project(const FfnHead& head, const FfnCache& cache) {
  if (!head.has_projection()) throw ShapeError("ffn_project '" + head.name + "': head has no projection");
  Matrix z = matmul(cache.hidden, head.wp);
  z.rowwise() += head.bp.row(0);
  return z;
}

FfnGradients ffn_backward(const FfnHead& head, const FfnCache& cache, const Matrix& d_logits,
                          const Matrix* d_projection) {
  const Index batch = cache.input.rows();
  require_shape(d_logits, batch, head.out_dim(), "ffn_backward '" + head.name + "' logits gradient");
  FfnGradients g;
  g.w2 = matmul(cache.hidden.transpose(), d_logits);
  g.b2 = d_logits.colwise().sum();
  Matrix d_hidden = matmul(d_logits, head.w2.transpose());
  if (d_projection != nullptr) {
    if (!head.has_projection()) throw ShapeError("ffn_backward '" + head.name + "': head has no projection");
    require_shape(*d_projection, batch, head.projection_dim(),
                  "ffn_backward '" + head.name + "' projection gradient");
    g.wp = matmul(cache.hidden.transpose(), *d_projection);
    g.bp = d_projection->colwise().sum();
    d_hidden += matmul(*d_projection, head.wp.transpose());
  } else {
    g.wp = Matrix::Zero(head.wp.rows(), head.wp.cols());
    g.bp = Matrix::Zero(head.bp.rows(), head.bp.cols());
  }
  const Matrix d_pre = d_hidden.cwiseProduct((cache.pre_activation.array() > 0.0).cast<double>().matrix());
  g.w1 = matmul(cache.input.transpose(), d_pre);
  g.b1 = d_pre.colwise().sum();
  g.input = matmul(d_pre, head.w1.transpose());
  return g;
}

std::vector<double> flatten(std::span<const Matrix* const> tensors) {
  std::vector<double> out;
  for (const Matrix* t : tensors) out.insert(out.end(), t->data(), t->data() + t->size());
  return out;
}

void unflatten(std::span<const double> values, std::span<Matrix* const> tensors) {
  std::size_t total = 0;
  for (const Matrix* t : tensors) total += static_cast<std::size_t>(t->size());
  if (total != values.size()) {
    throw ShapeError("unflatten: " + std::to_string(values.size()) + " values for " + std::to_string(total) +
                     " parameters");
  }
  std::size_t offset = 0;
  for (Matrix* t : tensors) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t->size(), t->data());
    offset += static_cast<std::size_t>(t->size());
  }
}

}  // namespace poesup
