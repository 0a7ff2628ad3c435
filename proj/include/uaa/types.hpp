#pragma once

#include <functional>

#include <Eigen/Dense>

namespace uaa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Linear operator v -> A v.
using LinearOperator = std::function<Vector(const Vector&)>;

}  // namespace uaa
