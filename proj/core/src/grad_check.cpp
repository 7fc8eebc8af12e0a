#include "poesup/grad_check.hpp"

#include <cmath>
#include <string>

#include "poesup/errors.hpp"

namespace poesup {

std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> x, double eps) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double plus = f(probe);
    probe[i] = saved - eps;
    const double minus = f(probe);
    probe[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("grad_check: function is non-finite at probe point for coordinate " +
                         std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

GradCheckResult grad_check(const ScalarFunction& f, std::span<const double> x,
                           std::span<const double> analytic, double eps) {
  if (analytic.size() != x.size()) {
    throw ShapeError("grad_check: analytic gradient has " + std::to_string(analytic.size()) +
                     " entries for a point with " + std::to_string(x.size()));
  }
  const std::vector<double> numeric = numeric_gradient(f, x, eps);
  GradCheckResult result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double rel = diff / (std::abs(analytic[i]) + std::abs(numeric[i]) + 1e-12);
    if (!(rel <= result.max_relative_error)) {
      result.max_relative_error = rel;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric[i];
    }
  }
  return result;
}

}  // namespace poesup
