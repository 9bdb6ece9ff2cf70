// microar_server: serves a story repository over HTTP.
//
// Configuration comes from MICROAR_DATA_DIR, MICROAR_BIND and
// MICROAR_PAGE_SIZE_CAP; command-line flags override them. Request logs go to
// stdout as canonical JSON lines.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "microar/http_service.hpp"

namespace {

microar::service::HttpService* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  microar::service::ServiceConfig config;
  try {
    config = microar::service::config_from_env();
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"ConfigError\",\"message\":" << nlohmann::json(e.what()).dump() << "}\n";
    return 1;
  }

  CLI::App app{"Story repository server."};
  std::string data_dir = config.data_dir.string();
  std::string host = config.host;
  int port = config.port;
  app.add_option("--data-dir", data_dir, "Storage directory");
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535));
  app.add_option("--page-size-cap", config.page_size_cap)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    microar::repo::Repository repository(data_dir, config.page_size_cap);
    microar::catalog::install_builtin_assets(repository.assets());
    microar::service::HttpService service(repository, &std::cout, config.default_page_size);
    g_service = &service;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    if (port == 0) {
      port = service.bind_any_port(host);
    } else if (!service.bind(host, port)) {
      port = -1;
    }
    if (port < 0) {
      std::cerr << "{\"error\":\"BindError\",\"message\":\"cannot bind " << host << "\"}\n";
      return 2;
    }
    std::cerr << "{\"listening\":\"http://" << host << ":" << port << "\",\"stories\":" << repository.size() << "}\n";
    const bool ok = service.serve();
    g_service = nullptr;
    return ok ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"StartupError\",\"message\":" << nlohmann::json(e.what()).dump() << "}\n";
    return 2;
  }
}
