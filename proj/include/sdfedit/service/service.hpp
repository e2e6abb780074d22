#pragma once

#include "sdfedit/editor/editor.hpp"
#include "sdfedit/geometry/mesh.hpp"
#include "sdfedit/regressor/regressor.hpp"
#include "sdfedit/sdfnet/autodecoder.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace sdfedit::service {

struct Request {
  std::string method;  // GET, POST, OPTIONS
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct ServiceConfig {
  std::size_t default_resolution = 64;
  std::size_t max_resolution = 96;
  /// Concurrent mesh extractions; further requests wait up to `queue_wait`
  /// and then get 503 with Retry-After.
  std::size_t mesh_workers = 2;
  std::chrono::milliseconds queue_wait{2000};
  /// Edited latents kept in memory; the oldest are dropped beyond this.
  std::size_t max_session_latents = 4096;
  bool largest_component_only = true;
};

struct ShapeEntry {
  std::string id;
  std::string name;
  std::vector<double> latent;
};

/// HTTP-shaped front end over frozen models. Every response carries the
/// model hash (body field "model_hash" and header X-Model-Hash) and CORS
/// headers. Endpoints, all JSON unless noted:
///
///   GET  /health
///   GET  /shapes                      id, name, latent_id, predicted attributes
///   GET  /shapes/{id}/mesh?res=N      indexed triangle list; format=bin for
///   GET  /latents/{id}/mesh?res=N     the binary variant
///   POST /edit  {"shape": id | "latent": latent_id,
///                "eps": {attribute: strength} | [strengths...],
///                "variant": "mlp" | "kan"}
///
/// Errors are {"error": {"code", "message", ...}}: 400 bad request, 404
/// unknown shape/latent/route, 422 degenerate direction (with "attribute"),
/// 503 mesh workers busy.
class EditService {
 public:
  EditService(sdf::SdfModel model, reg::RegressorBundle regressor, std::vector<edit::EditorBundle> editors,
              ServiceConfig config = {});

  /// Loads sdf/, regressor/ and every trained editor_*/ of a work directory.
  static EditService load(const std::filesystem::path& workdir, ServiceConfig config = {});

  Response handle(const Request& request) const;

  const std::string& model_hash() const noexcept { return model_hash_; }
  const std::vector<ShapeEntry>& catalog() const noexcept { return catalog_; }
  const std::vector<std::string>& attributes() const noexcept { return regressor_.attribute_names; }

  /// Content hash used as latent id.
  static std::string latent_id(const std::vector<double>& latent);

 private:
  Response health() const;
  Response shapes() const;
  Response edit(const Request& request) const;
  Response mesh(const std::vector<double>& latent, const std::string& latent_id, const Request& request) const;

  Response ok(nlohmann::json body) const;
  Response error(int status, const std::string& code, const std::string& message,
                 nlohmann::json extra = nlohmann::json::object()) const;

  bool find_latent(const std::string& id, std::vector<double>& out) const;
  void remember(const std::string& id, const std::vector<double>& latent) const;

  sdf::SdfModel model_;
  reg::RegressorBundle regressor_;
  std::map<edit::Variant, edit::EditorBundle> editors_;
  ServiceConfig config_;
  std::string model_hash_;
  std::vector<ShapeEntry> catalog_;
  std::unordered_map<std::string, std::size_t> shape_index_;
  std::unordered_map<std::string, std::size_t> base_latents_;

  mutable std::shared_mutex session_mutex_;
  mutable std::unordered_map<std::string, std::vector<double>> session_;
  mutable std::deque<std::string> session_order_;

  mutable std::mutex worker_mutex_;
  mutable std::condition_variable worker_cv_;
  mutable std::size_t busy_workers_ = 0;
};

/// Compact binary mesh: "SDFEMESH" | u32 version=1 | u32 vertex count |
/// u32 triangle count | vertices as f32 xyz | triangles as u32 triples.
std::vector<std::uint8_t> encode_mesh(const geo::Mesh& mesh);
geo::Mesh decode_mesh(const std::vector<std::uint8_t>& bytes);

}  // namespace sdfedit::service
