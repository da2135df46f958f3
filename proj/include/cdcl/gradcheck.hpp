#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cdcl/autodiff.hpp"

namespace cdcl {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;

  /// The same split by whether the analytic gradient is zero (|g| <= 1e-12).
  /// Where it is, the central difference only measures rounding in f and the
  /// relative error is meaningless, so the largest |numeric| is kept instead.
  double nonzero_relative_error = 0.0;
  std::size_t zero_coordinates = 0;
  double zero_max_numeric = 0.0;
};

/// Builds a scalar from the given parameters on a fresh tape.
using ScalarFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `f` against central differences.
///
/// For every coordinate of every parameter the relative error is
/// |analytic - numeric| / max(1e-8, |numeric|), and the maximum is returned.
/// Coordinates with zero analytic gradient are also summarized separately.
/// Parameter grads are zeroed before and left holding the analytic gradient
/// afterwards; values are restored exactly. Throws std::runtime_error if `f`
/// produces a non-finite value at any perturbed point.
GradCheckResult finite_diff_check(const ScalarFn& f, const std::vector<Parameter*>& params,
                                  double step = 1e-5);

}  // namespace cdcl
