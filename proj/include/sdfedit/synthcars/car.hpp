#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <array>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace sdfedit::cars {

using geo::Vec3;

// Generator parameters, in metres. Order is the canonical attribute order.
enum class Param : std::size_t {
  hood_length,
  cabin_length,
  rear_length,
  total_height,
  cabin_height,  // roof above the rear deck
  overall_width,
  wheel_radius,
  wheelbase,
  hood_height,
  corner_radius,
};
inline constexpr std::size_t kParamCount = 10;

const std::array<std::string, kParamCount>& param_names();
/// Throws std::invalid_argument for an unknown name.
Param param_from_name(const std::string& name);

struct ParamRange {
  std::string name;
  double min = 0.0;
  double max = 1.0;
};

/// One range per parameter, in canonical order.
std::vector<ParamRange> default_ranges();

struct CarParams {
  std::array<double, kParamCount> values{};

  double operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }
  double& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }
  double length() const;
};

/// Throws std::invalid_argument naming the first parameter outside its range
/// or a violated structural constraint.
void validate(const CarParams& params, const std::vector<ParamRange>& ranges);
CarParams sample_params(const std::vector<ParamRange>& ranges, std::mt19937_64& rng);
CarParams midpoint_params(const std::vector<ParamRange>& ranges);

// The car sits centred on its bounding box: x forward, y left, z up, wheels
// touching z = -height/2. All distances below are in metres.

/// Components: hood, cabin, rear body (rounded boxes) and four wheels (capped
/// cylinders along y).
std::array<double, 7> component_sdfs(const CarParams& params, const Vec3& p);
/// Min-union of the components: exact outside, a lower bound on depth inside.
double car_sdf(const CarParams& params, const Vec3& p);
geo::Aabb car_bounds(const CarParams& params);

/// Isotropic scale taking the largest admissible car's bbox diagonal to `diagonal`.
double corpus_scale(const std::vector<ParamRange>& ranges, double diagonal = 1.6);

/// car_sdf expressed in the normalized frame p_n = scale * p.
inline double normalized_car_sdf(const CarParams& params, double scale, const Vec3& p) {
  return car_sdf(params, p / scale) * scale;
}

/// Attribute names are either parameter names or the proxy style scores
/// "sportiness" and "boxiness".
std::vector<std::string> default_attribute_names();
bool is_style_attribute(const std::string& name);

/// entry_i = (param_i - min_i) / (max_i - min_i) for parameter attributes;
/// proxy scores are convex combinations of normalized parameters.
std::vector<double> car_attributes(const CarParams& params, const std::vector<ParamRange>& ranges,
                                   const std::vector<std::string>& names);
/// Inverts the parameter attributes. All ten parameters must be present.
CarParams params_from_attributes(const std::vector<double>& attributes,
                                 const std::vector<ParamRange>& ranges,
                                 const std::vector<std::string>& names);

}  // namespace sdfedit::cars
