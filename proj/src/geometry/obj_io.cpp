#include "sdfedit/geometry/obj_io.hpp"

#include "sdfedit/common/io.hpp"

#include <charconv>
#include <cstdio>
#include <map>

namespace sdfedit::geo {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw FormatError("obj line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line_no) {
  // from_chars for double is missing in older libstdc++ builds; strtod needs a terminated copy.
  const std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail(line_no, "bad coordinate '" + s + "'");
  return v;
}

}  // namespace

Mesh parse_obj(std::string_view text, std::vector<std::string>* warnings) {
  Mesh mesh;
  std::map<std::string, std::size_t> skipped;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool fanned = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) fail(line_no, "vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(toks[1], line_no), parse_double(toks[2], line_no),
                                 parse_double(toks[3], line_no));
    } else if (toks[0] == "f") {
      if (toks.size() < 4) fail(line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        const auto head = toks[k].substr(0, toks[k].find('/'));
        long long v = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc() || p != head.data() + head.size() || v == 0) {
          fail(line_no, "malformed face index '" + std::string(toks[k]) + "'");
        }
        const auto n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = v > 0 ? v - 1 : n + v;
        if (resolved < 0 || resolved >= n) {
          fail(line_no, "face index " + std::to_string(v) + " out of range (" +
                            std::to_string(n) + " vertices so far)");
        }
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() > 3) fanned = true;
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
      }
    } else {
      ++skipped[std::string(toks[0])];
    }
  }
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw FormatError("no geometry");
  if (warnings) {
    for (const auto& [tag, n] : skipped) {
      warnings->push_back("ignored " + std::to_string(n) + " '" + tag + "' record(s)");
    }
    if (fanned) warnings->push_back("polygon faces were fan-triangulated");
  }
  return mesh;
}

std::string format_obj(const Mesh& mesh) {
  validate(mesh);
  std::string out;
  out.reserve(mesh.vertices.size() * 64 + mesh.triangles.size() * 24);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    const int n = std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out.append(buf, static_cast<std::size_t>(n));
  }
  for (const auto& t : mesh.triangles) {
    const int n = std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

Mesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_obj(read_text(path), warnings);
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  atomic_write(path, format_obj(mesh));
}

}  // namespace sdfedit::geo
