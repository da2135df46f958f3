#pragma once

#include <Eigen/Dense>

namespace cdcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

// Guard applied inside log, sqrt and divisions.
inline constexpr double kNumericFloor = 1e-12;

}  // namespace cdcl
