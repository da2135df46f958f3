#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdcl/gradcheck.hpp"

namespace cdcl {

/// Losses covered by loss_gradchecks, in report order.
inline const std::vector<std::string> kGradcheckLosses = {"CCL", "DCL", "CNCL",
                                                          "CDCL", "OCC", "CCL_REG"};

struct LossGradCheckOptions {
  Index input_channels = 2;
  Index hidden_dim = 4;
  Index blocks = 2;
  Index transforms = 2;
  Index batch = 3;
  Index sub_length = 8;
  double step = 1e-5;
  double tolerance = 1e-4;
  double zero_numeric_tolerance = 1e-9;
};

struct LossGradCheckRow {
  std::string loss;
  GradCheckResult result;
  /// Relative error below `tolerance` on every coordinate with a nonzero
  /// analytic gradient, and |numeric| below `zero_numeric_tolerance` on the
  /// rest. CCL is blind to anything that moves O and G together (the output
  /// bias always, a last-block batch-norm shift whenever its ReLU is on for
  /// both), so such coordinates have a zero gradient and a noisy difference.
  bool passed = false;
};

/// Finite-difference check of every loss end to end (train-mode encoder,
/// transformation bank, loss head) on a randomly initialized model and a
/// random batch drawn from `seed`.
std::vector<LossGradCheckRow> loss_gradchecks(std::uint64_t seed,
                                              const LossGradCheckOptions& options = {});

}  // namespace cdcl
