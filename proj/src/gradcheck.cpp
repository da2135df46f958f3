#include "cdcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdcl {

namespace {

constexpr double kZeroGradient = 1e-12;

double evaluate(const ScalarFn& f) {
  Tape tape;
  const double v = f(tape).scalar();
  if (!std::isfinite(v)) throw std::runtime_error("finite_diff_check: non-finite evaluation");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(const ScalarFn& f, const std::vector<Parameter*>& params,
                                  double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var y = f(tape);
    if (!std::isfinite(y.scalar()))
      throw std::runtime_error("finite_diff_check: non-finite evaluation");
    tape.backward(y);
  }

  GradCheckResult result;
  for (Parameter* p : params) {
    for (Index i = 0; i < p->value.size(); ++i) {
      const double original = p->value(i);
      p->value(i) = original + step;
      const double plus = evaluate(f);
      p->value(i) = original - step;
      const double minus = evaluate(f);
      p->value(i) = original;

      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = p->grad(i);
      const double err = std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
      ++result.coordinates;
      if (std::abs(analytic) <= kZeroGradient) {
        ++result.zero_coordinates;
        result.zero_max_numeric = std::max(result.zero_max_numeric, std::abs(numeric));
      } else {
        result.nonzero_relative_error = std::max(result.nonzero_relative_error, err);
      }
      if (err > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace cdcl
