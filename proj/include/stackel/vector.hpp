#pragma once

#include <Eigen/Dense>

namespace stackel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace stackel
