#include "sdfedit/sdfnet/encoding.hpp"

#include <cmath>
#include <numbers>

namespace sdfedit::sdf {
namespace {

void encode_into(double p, std::size_t bands, double* out) {
  double freq = std::numbers::pi;
  for (std::size_t k = 0; k < bands; ++k) {
    out[2 * k] = std::sin(freq * p);
    out[2 * k + 1] = std::cos(freq * p);
    freq *= 2.0;
  }
}

}  // namespace

std::vector<double> positional_encode(double p, std::size_t bands) {
  std::vector<double> out(2 * bands);
  encode_into(p, bands, out.data());
  return out;
}

std::vector<double> positional_encode(const Eigen::Vector3d& p, std::size_t bands) {
  std::vector<double> out(6 * bands);
  for (int c = 0; c < 3; ++c) encode_into(p[c], bands, out.data() + 2 * bands * static_cast<std::size_t>(c));
  return out;
}

nn::Tensor positional_encode(const nn::Tensor& points, std::size_t bands) {
  if (points.cols() != 3) throw nn::ShapeError("positional_encode expects [*, 3], got " + nn::to_string(points.shape()));
  const std::size_t n = points.rows();
  nn::Tensor out({n, 6 * bands});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) encode_into(points.at(r, c), bands, &out.at(r, 2 * bands * c));
  }
  return out;
}

}  // namespace sdfedit::sdf
