#include "poesup/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "poesup/errors.hpp"

namespace poesup {

std::string_view to_string(SupConVariant variant) {
  return variant == SupConVariant::Standard ? "standard" : "literal";
}

SupConVariant parse_supcon_variant(std::string_view text) {
  if (text == "standard") return SupConVariant::Standard;
  if (text == "literal") return SupConVariant::PaperLiteral;
  throw InputError("unknown supcon variant '" + std::string(text) + "' (expected standard or literal)");
}

LossAndGrad supcon_loss(const ContrastiveBatch& batch) {
  const Matrix& h = batch.embeddings;
  const Index n = h.rows();
  if (!(batch.temperature > 0.0)) throw std::invalid_argument("supcon_loss: temperature must be positive");
  if (static_cast<Index>(batch.picture_ids.size()) != n) {
    throw std::invalid_argument("supcon_loss: " + std::to_string(batch.picture_ids.size()) +
                                " picture ids for " + std::to_string(n) + " embeddings");
  }
  for (Index r = 0; r < n; ++r) {
    // Zero rows come from normalize_rows on an all-zero projection.
    const double norm = h.row(r).norm();
    if (norm != 0.0 && std::abs(norm - 1.0) > 1e-9) {
      throw std::invalid_argument("supcon_loss: embedding row " + std::to_string(r) + " is not unit length");
    }
  }

  LossAndGrad out;
  out.grad = Matrix::Zero(n, h.cols());
  if (n < 2) return out;

  const Matrix sim = matmul(h, h.transpose()) / batch.temperature;
  const auto& ids = batch.picture_ids;
  // coeff(k, j) = d loss / d sim(k, j)
  Matrix coeff = Matrix::Zero(n, n);
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    Index positives = 0;
    Index in_denominator = 0;
    double max_s = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == k) continue;
      const bool positive = ids[j] == ids[k];
      positives += positive ? 1 : 0;
      if (batch.variant == SupConVariant::Standard || !positive) {
        ++in_denominator;
        max_s = std::max(max_s, sim(k, j));
      }
    }
    if (positives == 0 || in_denominator == 0) continue;

    double denom = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == k) continue;
      if (batch.variant == SupConVariant::Standard || ids[j] != ids[k]) {
        weights[static_cast<std::size_t>(j)] = std::exp(sim(k, j) - max_s);
        denom += weights[static_cast<std::size_t>(j)];
      } else {
        weights[static_cast<std::size_t>(j)] = 0.0;
      }
    }
    const double log_denom = max_s + std::log(denom);
    const double inv_p = 1.0 / static_cast<double>(positives);
    double positive_sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == k) continue;
      if (ids[j] == ids[k]) {
        positive_sum += sim(k, j);
        coeff(k, j) -= inv_p;
      }
      coeff(k, j) += weights[static_cast<std::size_t>(j)] / denom;
    }
    out.loss += log_denom - inv_p * positive_sum;
  }
  out.grad = matmul(coeff + coeff.transpose(), h) / batch.temperature;
  return out;
}

LossAndGrad cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const Index n = logits.rows();
  if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(n) + " rows");
  }
  const Matrix log_probs = log_softmax_rows(logits);
  LossAndGrad out;
  out.grad = log_probs.array().exp().matrix();
  for (Index r = 0; r < n; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " out of range");
    }
    out.loss -= log_probs(r, y);
    out.grad(r, y) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad *= inv_n;
  return out;
}

NormalizedRows normalize_rows(const Matrix& x) {
  NormalizedRows out;
  out.norms = x.rowwise().norm();
  out.unit = x;
  for (Index r = 0; r < x.rows(); ++r) {
    // Degenerate rows map to zero and pass no gradient.
    if (out.norms(r) < 1e-12) out.unit.row(r).setZero();
    else out.unit.row(r) /= out.norms(r);
  }
  return out;
}

Matrix normalize_rows_backward(const NormalizedRows& forward, const Matrix& d_unit) {
  require_shape(d_unit, forward.unit.rows(), forward.unit.cols(), "normalize_rows gradient");
  Matrix dx(d_unit.rows(), d_unit.cols());
  for (Index r = 0; r < d_unit.rows(); ++r) {
    if (forward.norms(r) < 1e-12) {
      dx.row(r).setZero();
      continue;
    }
    const double along = forward.unit.row(r).dot(d_unit.row(r));
    dx.row(r) = (d_unit.row(r) - along * forward.unit.row(r)) / forward.norms(r);
  }
  return dx;
}

double total_loss(double ce, double supcon, double lambda) { return ce + lambda * supcon; }

}  // namespace poesup
