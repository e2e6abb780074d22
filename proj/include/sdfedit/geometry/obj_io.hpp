#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sdfedit::geo {

/// Parses Wavefront OBJ text. Only `v` and `f` records are used; polygons are
/// fan-triangulated and other records are skipped, each noted in `warnings`.
/// Throws FormatError with the offending line number.
Mesh parse_obj(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string format_obj(const Mesh& mesh);

Mesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace sdfedit::geo
