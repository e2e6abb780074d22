#pragma once

#include "sdfedit/numerics/tensor.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace sdfedit::sdf {

/// Per coordinate, per band k in [0, bands): sin(2^k pi p), cos(2^k pi p).
/// Coordinate-major, so a 3-vector encodes to 6 * bands entries.
std::vector<double> positional_encode(const Eigen::Vector3d& p, std::size_t bands);
/// Scalar form: 2 * bands entries.
std::vector<double> positional_encode(double p, std::size_t bands);
/// Row-wise encoding of an (n x 3) point matrix into (n x 6*bands).
nn::Tensor positional_encode(const nn::Tensor& points, std::size_t bands);

}  // namespace sdfedit::sdf
