#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace poesup {

using ScalarFunction = std::function<double(std::span<const double>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central-difference gradient of f at x.
/// Throws NumericError if f is non-finite at any probe point.
std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> x, double eps);

/// Compares `analytic` against central differences of f at x. Per coordinate the
/// error is |a - n| / (|a| + |n| + 1e-12); the maximum over coordinates is reported.
///
/// f is assumed differentiable at every x +- eps * e_i. Callers checking ReLU
/// networks must keep pre-activations away from zero by more than the effect
/// of an eps-sized perturbation.
GradCheckResult grad_check(const ScalarFunction& f, std::span<const double> x,
                           std::span<const double> analytic, double eps = 1e-5);

}  // namespace poesup
