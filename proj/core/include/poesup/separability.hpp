#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

struct SeparabilityResult {
  /// Mean silhouette over the samples used, in [-1, 1].
  double mean_silhouette = 0.0;
  std::size_t samples_used = 0;
  /// Pictures with a single sample; they are left out of the computation.
  std::vector<int> excluded_pictures;
};

/// Silhouette coefficient of the picture clustering with Euclidean distance.
/// For a sample, a = mean distance to the rest of its picture, b = smallest
/// mean distance to another picture, s = (b - a) / max(a, b), and s = 0 when
/// max(a, b) = 0.
///
/// Throws std::invalid_argument if fewer than two pictures have two or more samples.
SeparabilityResult picture_separability(const Matrix& embeddings, std::span<const int> picture_ids);

}  // namespace poesup
