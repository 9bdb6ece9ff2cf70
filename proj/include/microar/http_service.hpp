#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "microar/repository.hpp"

namespace microar::service {

struct ServiceConfig {
  std::filesystem::path data_dir = "microar-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::int64_t page_size_cap = repo::kDefaultPageSizeCap;
  std::int64_t default_page_size = 20;
};

// Reads MICROAR_DATA_DIR, MICROAR_BIND ("host:port") and MICROAR_PAGE_SIZE_CAP
// over the defaults. Throws std::invalid_argument on malformed values.
ServiceConfig config_from_env();

// REST front end over a Repository. Every request produces one canonical JSON
// log line on `log` (nullptr disables logging).
class HttpService {
 public:
  HttpService(repo::Repository& repository, std::ostream* log, std::int64_t default_page_size = 20);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds and blocks until stop(). Returns false if binding fails.
  bool listen(const std::string& host, int port);
  bool bind(const std::string& host, int port);
  // Binds to an ephemeral port and returns it, or -1.
  int bind_any_port(const std::string& host);
  // Serves on the bound socket; blocks until stop().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Test and tool helper: a service on an ephemeral loopback port, served from a
// background thread for the lifetime of the object.
class BackgroundServer {
 public:
  BackgroundServer(repo::Repository& repository, std::ostream* log = nullptr);
  ~BackgroundServer();

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  HttpService service_;
  int port_ = -1;
  struct Thread;
  std::unique_ptr<Thread> thread_;
};

}  // namespace microar::service
