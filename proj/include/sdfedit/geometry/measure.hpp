#pragma once

#include "sdfedit/geometry/mesh.hpp"

namespace sdfedit::geo {

/// Axis-aligned extents: x is length, y width, z height.
struct MeasuredAttributes {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Throws std::invalid_argument for an empty mesh.
MeasuredAttributes measure_attributes(const Mesh& mesh);

}  // namespace sdfedit::geo
