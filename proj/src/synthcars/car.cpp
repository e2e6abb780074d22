#include "sdfedit/synthcars/car.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdfedit::cars {
namespace {

constexpr double kWheelHalfWidth = 0.12;
constexpr double kClearanceRatio = 0.8;

double rounded_box(const Vec3& p, const Vec3& center, Vec3 half, double r) {
  r = std::min({r, half.x(), half.y(), half.z()});
  const Vec3 q = (p - center).cwiseAbs() - (half - Vec3::Constant(r));
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0) - r;
}

// Cylinder with axis along y.
double capped_cylinder_y(const Vec3& p, const Vec3& center, double radius, double half_width) {
  const Vec3 d = p - center;
  const double a = std::hypot(d.x(), d.z()) - radius;
  const double b = std::abs(d.y()) - half_width;
  return std::min(std::max(a, b), 0.0) + std::hypot(std::max(a, 0.0), std::max(b, 0.0));
}

double normalized(const CarParams& c, Param p, const std::vector<ParamRange>& ranges) {
  const auto& r = ranges[static_cast<std::size_t>(p)];
  return (c[p] - r.min) / (r.max - r.min);
}

}  // namespace

const std::array<std::string, kParamCount>& param_names() {
  static const std::array<std::string, kParamCount> names = {
      "hood_length",   "cabin_length", "rear_length", "total_height", "cabin_height",
      "overall_width", "wheel_radius", "wheelbase",   "hood_height",  "corner_radius"};
  return names;
}

Param param_from_name(const std::string& name) {
  const auto& names = param_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("unknown car parameter '" + name + "'");
  return static_cast<Param>(it - names.begin());
}

std::vector<ParamRange> default_ranges() {
  const auto& n = param_names();
  return {{n[0], 0.80, 1.30}, {n[1], 1.80, 2.60}, {n[2], 0.70, 1.20}, {n[3], 1.30, 1.85},
          {n[4], 0.40, 0.70}, {n[5], 1.60, 2.00}, {n[6], 0.28, 0.40}, {n[7], 1.90, 2.70},
          {n[8], 0.75, 1.05}, {n[9], 0.04, 0.22}};
}

double CarParams::length() const {
  return (*this)[Param::hood_length] + (*this)[Param::cabin_length] + (*this)[Param::rear_length];
}

void validate(const CarParams& params, const std::vector<ParamRange>& ranges) {
  if (ranges.size() != kParamCount) throw std::invalid_argument("expected one range per car parameter");
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto& r = ranges[i];
    if (r.name != param_names()[i]) {
      throw std::invalid_argument("range " + std::to_string(i) + " is '" + r.name + "', expected '" +
                                  param_names()[i] + "'");
    }
    if (!(r.max > r.min)) throw std::invalid_argument("empty range for " + r.name);
    const double v = params.values[i];
    if (!(v >= r.min && v <= r.max)) {
      throw std::invalid_argument(r.name + " = " + std::to_string(v) + " outside [" +
                                  std::to_string(r.min) + ", " + std::to_string(r.max) + "]");
    }
  }
  if (!(params[Param::wheelbase] < params.length())) {
    throw std::invalid_argument("wheelbase must be shorter than the body");
  }
  if (!(params[Param::cabin_height] < params[Param::total_height])) {
    throw std::invalid_argument("cabin_height must be below total_height");
  }
  if (!(params[Param::hood_height] < params[Param::total_height])) {
    throw std::invalid_argument("hood_height must be below total_height");
  }
  const double clearance = kClearanceRatio * params[Param::wheel_radius];
  if (!(params[Param::total_height] - params[Param::cabin_height] > clearance)) {
    throw std::invalid_argument("rear deck sits below the ground clearance");
  }
  if (!(params[Param::total_height] - params[Param::cabin_height] - clearance >= 2 * params[Param::corner_radius])) {
    throw std::invalid_argument("rear deck too thin for its corner radius");
  }
  if (!(params[Param::wheelbase] / 2 + params[Param::wheel_radius] <= params.length() / 2 + 1e-12)) {
    throw std::invalid_argument("wheels protrude past the body");
  }
}

CarParams sample_params(const std::vector<ParamRange>& ranges, std::mt19937_64& rng) {
  // Rejection keeps the draw uniform over the valid region.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CarParams c;
    for (std::size_t i = 0; i < kParamCount; ++i) {
      std::uniform_real_distribution<double> u(ranges.at(i).min, ranges.at(i).max);
      c.values[i] = u(rng);
    }
    try {
      validate(c, ranges);
      return c;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::invalid_argument("parameter ranges admit no valid car");
}

CarParams midpoint_params(const std::vector<ParamRange>& ranges) {
  CarParams c;
  for (std::size_t i = 0; i < kParamCount; ++i) c.values[i] = 0.5 * (ranges.at(i).min + ranges.at(i).max);
  return c;
}

std::array<double, 7> component_sdfs(const CarParams& c, const Vec3& p) {
  const double L = c.length();
  const double H = c[Param::total_height];
  const double W = c[Param::overall_width];
  const double R = c[Param::wheel_radius];
  const double r = c[Param::corner_radius];
  const double hood = c[Param::hood_length];
  const double cabin = c[Param::cabin_length];
  const double ground = -H / 2;
  const double floor = ground + kClearanceRatio * R;

  auto box = [&](double x0, double x1, double z1) {
    return rounded_box(p, Vec3((x0 + x1) / 2, 0.0, (floor + z1) / 2),
                       Vec3((x1 - x0) / 2, W / 2, (z1 - floor) / 2), r);
  };
  // Hood and rear reach 2r into the cabin so the junctions have no groove.
  const double front = L / 2;
  const double cabin_front = front - hood;
  const double cabin_back = cabin_front - cabin;
  std::array<double, 7> d{};
  d[0] = box(cabin_front - 2 * r, front, ground + c[Param::hood_height]);
  d[1] = box(cabin_back, cabin_front, ground + H);
  d[2] = box(-L / 2, cabin_back + 2 * r, ground + H - c[Param::cabin_height]);
  const double wx = c[Param::wheelbase] / 2;
  const double wy = W / 2 - kWheelHalfWidth;
  int k = 3;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      d[k++] = capped_cylinder_y(p, Vec3(sx * wx, sy * wy, ground + R), R, kWheelHalfWidth);
    }
  }
  return d;
}

double car_sdf(const CarParams& params, const Vec3& p) {
  const auto d = component_sdfs(params, p);
  return *std::min_element(d.begin(), d.end());
}

geo::Aabb car_bounds(const CarParams& c) {
  geo::Aabb b;
  b.lo = Vec3(-c.length() / 2, -c[Param::overall_width] / 2, -c[Param::total_height] / 2);
  b.hi = -b.lo;
  return b;
}

double corpus_scale(const std::vector<ParamRange>& ranges, double diagonal) {
  auto mx = [&](Param p) { return ranges.at(static_cast<std::size_t>(p)).max; };
  const double L = mx(Param::hood_length) + mx(Param::cabin_length) + mx(Param::rear_length);
  const double d = std::sqrt(L * L + mx(Param::overall_width) * mx(Param::overall_width) +
                             mx(Param::total_height) * mx(Param::total_height));
  return diagonal / d;
}

std::vector<std::string> default_attribute_names() {
  return {param_names().begin(), param_names().end()};
}

bool is_style_attribute(const std::string& name) { return name == "sportiness" || name == "boxiness"; }

std::vector<double> car_attributes(const CarParams& params, const std::vector<ParamRange>& ranges,
                                   const std::vector<std::string>& names) {
  validate(params, ranges);
  std::vector<double> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    double v = 0.0;
    if (name == "sportiness") {
      v = 0.5 * (1.0 - normalized(params, Param::total_height, ranges)) +
          0.3 * normalized(params, Param::hood_length, ranges) +
          0.2 * (1.0 - normalized(params, Param::cabin_height, ranges));
    } else if (name == "boxiness") {
      v = 0.6 * (1.0 - normalized(params, Param::corner_radius, ranges)) +
          0.4 * normalized(params, Param::cabin_height, ranges);
    } else {
      v = normalized(params, param_from_name(name), ranges);
    }
    out.push_back(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

CarParams params_from_attributes(const std::vector<double>& attributes,
                                 const std::vector<ParamRange>& ranges,
                                 const std::vector<std::string>& names) {
  if (attributes.size() != names.size()) throw std::invalid_argument("attribute count mismatch");
  CarParams c;
  std::array<bool, kParamCount> seen{};
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (is_style_attribute(names[i])) continue;
    const auto p = static_cast<std::size_t>(param_from_name(names[i]));
    c.values[p] = ranges.at(p).min + attributes[i] * (ranges.at(p).max - ranges.at(p).min);
    seen[p] = true;
  }
  for (std::size_t p = 0; p < kParamCount; ++p) {
    if (!seen[p]) throw std::invalid_argument("attributes lack " + param_names()[p]);
  }
  return c;
}

}  // namespace sdfedit::cars
