#include "sdfedit/service/http.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
  CLI::App app{"HTTP editing service over a trained work directory"};
  std::string workdir = ".";
  std::string host = "127.0.0.1";
  int port = 8080;
  sdfedit::service::ServiceConfig config;
  std::size_t wait_ms = std::size_t(config.queue_wait.count());
  app.add_option("-w,--workdir", workdir, "Work directory with sdf/, regressor/ and editor_*/");
  app.add_option("--host", host);
  app.add_option("--port", port)->check(CLI::Range(1, 65535));
  app.add_option("--default-res", config.default_resolution);
  app.add_option("--max-res", config.max_resolution);
  app.add_option("--mesh-workers", config.mesh_workers, "Concurrent mesh extractions");
  app.add_option("--queue-wait-ms", wait_ms, "Wait for a mesh worker before answering 503");
  CLI11_PARSE(app, argc, argv);
  config.queue_wait = std::chrono::milliseconds(wait_ms);

  try {
    const auto service = sdfedit::service::EditService::load(workdir, config);
    httplib::Server server;
    sdfedit::service::mount(server, service);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
    spdlog::info("model_hash={} shapes={} listening on {}:{}", service.model_hash(), service.catalog().size(), host,
                 port);
    if (!server.listen(host, port)) {
      spdlog::error("cannot listen on {}:{}", host, port);
      return 1;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
