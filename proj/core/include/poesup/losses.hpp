#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

/// Which samples appear in the supervised contrastive denominator.
enum class SupConVariant {
  /// All non-anchor samples in the batch (Khosla et al.). Loss is >= 0.
  Standard,
  /// Only samples of a different picture. Unbounded below.
  PaperLiteral,
};

std::string_view to_string(SupConVariant variant);
/// Accepts "standard" and "literal".
SupConVariant parse_supcon_variant(std::string_view text);

struct ContrastiveBatch {
  /// One unit-norm row per sample.
  Matrix embeddings;
  /// Positives of anchor k are the other rows sharing picture_ids[k].
  std::vector<int> picture_ids;
  double temperature = 0.07;
  SupConVariant variant = SupConVariant::Standard;
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Supervised contrastive loss summed over anchors, with d loss / d embeddings.
///
/// For anchor k with positives P(k) and denominator set D(k):
///   term_k = -(1/|P(k)|) sum_{p in P(k)} [ s_kp - log sum_{d in D(k)} exp(s_kd) ],
///   s_kj = h_k . h_j / temperature.
/// Anchors without positives contribute 0, and so do PaperLiteral anchors
/// without negatives. Batches of fewer than two rows give loss 0.
///
/// Throws std::invalid_argument if temperature <= 0, the id count does not
/// match the row count, or a row is neither unit length within 1e-9 nor
/// exactly zero.
LossAndGrad supcon_loss(const ContrastiveBatch& batch);

/// Mean over rows of -log_softmax(logits)[label]. Gradient is
/// (softmax - onehot) / batch. Throws std::invalid_argument on an empty batch
/// or a label outside [0, cols).
LossAndGrad cross_entropy(const Matrix& logits, std::span<const int> labels);

struct NormalizedRows {
  Matrix unit;
  Vector norms;
};

/// Scales each row to unit Euclidean length. Rows with norm below 1e-12 become
/// zero and receive zero gradient in normalize_rows_backward.
NormalizedRows normalize_rows(const Matrix& x);

/// d/dx of normalize_rows: (d_unit - u (u . d_unit)) / |x| per row.
Matrix normalize_rows_backward(const NormalizedRows& forward, const Matrix& d_unit);

/// ce + lambda * supcon.
double total_loss(double ce, double supcon, double lambda);

}  // namespace poesup
