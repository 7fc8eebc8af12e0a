#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poesup {

struct GradCheckRow {
  std::string name;
  int point = 0;
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
};

struct GradCheckSuiteOptions {
  std::uint64_t seed = 0;
  int points = 5;
  double eps = 1e-5;
  /// Negative control: perturbs one analytic gradient entry of the
  /// end-to-end objective so its rows must fail.
  bool corrupt_end_to_end = false;
};

/// Finite-difference checks of every analytic gradient the trainer relies on:
/// cross-entropy, both SupCon variants (through row normalization), PoE-fused
/// cross-entropy, and the full multimodal objective with respect to every
/// head parameter. One row per (objective, random point).
///
/// ReLU kinks are avoided by redrawing a point until every hidden
/// pre-activation is at least 1e-3 away from zero.
std::vector<GradCheckRow> run_gradcheck_suite(const GradCheckSuiteOptions& opts);

}  // namespace poesup
