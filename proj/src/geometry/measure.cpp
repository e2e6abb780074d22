#include "sdfedit/geometry/measure.hpp"

#include <stdexcept>

namespace sdfedit::geo {

MeasuredAttributes measure_attributes(const Mesh& mesh) {
  if (mesh.empty()) throw std::invalid_argument("cannot measure an empty mesh");
  const Vec3 e = bounds(mesh).extent();
  return {e.x(), e.y(), e.z()};
}

}  // namespace sdfedit::geo
