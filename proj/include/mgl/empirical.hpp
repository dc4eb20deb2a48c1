#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace mgl {

// Uniformly weighted point cloud; row i is the point X_i in R^D.
struct EmpiricalMeasure {
  Eigen::MatrixXd points;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
};

}  // namespace mgl
