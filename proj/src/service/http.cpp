#include "sdfedit/service/http.hpp"

#include <httplib.h>

namespace sdfedit::service {

void mount(httplib::Server& server, const EditService& service) {
  const auto route = [&service](const httplib::Request& in, httplib::Response& out) {
    Request req{in.method, in.path, {}, in.body};
    for (const auto& [key, value] : in.params) req.query.emplace(key, value);
    Response r;
    try {
      r = service.handle(req);
    } catch (const std::exception& e) {
      r.status = 500;
      r.body = nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}}},
                              {"model_hash", service.model_hash()}}
                   .dump();
      r.headers["X-Model-Hash"] = service.model_hash();
      r.headers["Access-Control-Allow-Origin"] = "*";
    }
    out.status = r.status;
    for (const auto& [key, value] : r.headers) out.set_header(key, value);
    if (r.status != 204) out.set_content(r.body, r.content_type);
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Options(".*", route);
}

}  // namespace sdfedit::service
