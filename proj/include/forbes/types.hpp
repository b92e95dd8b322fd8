#pragma once

#include <Eigen/Core>

namespace forbes {

using Scalar = double;
using Array2D = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace forbes
