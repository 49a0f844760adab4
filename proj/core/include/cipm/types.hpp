#pragma once

#include <Eigen/Dense>

namespace cipm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

} // namespace cipm
