#include "microar/http_service.hpp"

#include <httplib.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "microar/package_format.hpp"

namespace microar::service {

using nlohmann::json;

namespace {

std::int64_t parse_int(const std::string& s, const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw repo::RepositoryError(400, "BadRequest", std::string(what) + " must be an integer");
  return v;
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

StoryId parse_id(const std::string& hex) {
  if (!is_story_id_hex(hex)) throw repo::RepositoryError(400, "BadRequest", "malformed story id");
  return StoryId::parse(hex);
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Vec3 parse_vec3(const std::string& s, const char* what) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw repo::RepositoryError(400, "BadRequest", std::string(what) + " must be x,y,z");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    char* end = nullptr;
    v[i] = std::strtod(parts[static_cast<std::size_t>(i)].c_str(), &end);
    if (parts[static_cast<std::size_t>(i)].empty() || *end != '\0' || !std::isfinite(v[i]))
      throw repo::RepositoryError(400, "BadRequest", std::string(what) + " must be x,y,z");
  }
  return {v[0], v[1], v[2]};
}

json lineage_json(const std::vector<repo::LineageEntry>& chain) {
  json out = json::array();
  for (const auto& e : chain) {
    json j = repo::to_json(e.listing);
    j["diff_from_parent"] = e.diff_from_parent ? remix::to_json(*e.diff_from_parent) : json(nullptr);
    out.push_back(std::move(j));
  }
  return {{"chain", std::move(out)}};
}

}  // namespace

ServiceConfig config_from_env() {
  ServiceConfig c;
  if (const char* dir = std::getenv("MICROAR_DATA_DIR"); dir && *dir) c.data_dir = dir;
  if (const char* bind = std::getenv("MICROAR_BIND"); bind && *bind) {
    const std::string b = bind;
    const auto colon = b.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("MICROAR_BIND must be host:port");
    c.host = b.substr(0, colon);
    const auto port = b.substr(colon + 1);
    int p = 0;
    const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
    if (ec != std::errc() || ptr != port.data() + port.size() || p < 0 || p > 65535)
      throw std::invalid_argument("MICROAR_BIND port is invalid");
    c.port = p;
  }
  if (const char* cap = std::getenv("MICROAR_PAGE_SIZE_CAP"); cap && *cap) {
    const std::string s = cap;
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1)
      throw std::invalid_argument("MICROAR_PAGE_SIZE_CAP must be a positive integer");
    c.page_size_cap = v;
  }
  c.default_page_size = std::min<std::int64_t>(c.default_page_size, c.page_size_cap);
  return c;
}

struct HttpService::Impl {
  repo::Repository& repository;
  std::ostream* log;
  std::int64_t default_page_size;
  httplib::Server server;
  std::mutex log_mutex;

  Impl(repo::Repository& r, std::ostream* l, std::int64_t d) : repository(r), log(l), default_page_size(d) {
    routes();
  }

  void routes() {
    server.set_payload_max_length(std::size_t{64} << 20);

    // Browser clients on another origin send `creator`, which forces a preflight.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, creator");
      res.set_header("Access-Control-Max-Age", "600");
      res.status = 204;
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const repo::RepositoryError& e) {
        send_json(res, e.status(), e.to_json());
      } catch (const catalog::NotFound& e) {
        send_json(res, 404, {{"error", "NotFound"}, {"message", e.what()}});
      } catch (const std::invalid_argument& e) {
        send_json(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
      }
    });

    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
      if (!log) return;
      json params = json::object();
      for (const auto& [k, v] : req.params) params[k] = v;
      const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      const json line = {{"ts_ms", now},          {"method", req.method},         {"path", req.path},
                         {"params", params},      {"status", res.status},         {"bytes_in", req.body.size()},
                         {"bytes_out", res.body.size()}};
      std::lock_guard lock(log_mutex);
      *log << canonical_dump(line) << '\n' << std::flush;
    });

    server.Post("/stories", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::string> creator;
      if (req.has_header("creator")) creator = req.get_header_value("creator");
      const auto r = repository.publish(req.body, creator);
      send_json(res, r.created ? 201 : 200, {{"story_id", r.story_id.hex()}, {"created", r.created}});
    });

    server.Get("/stories", [this](const httplib::Request& req, httplib::Response& res) {
      const auto page = param(req, "page");
      const auto size = param(req, "page_size");
      const auto listing = repository.list(page ? parse_int(*page, "page") : 1,
                                           size ? parse_int(*size, "page_size") : default_page_size,
                                           param(req, "creator"));
      send_json(res, 200, repo::to_json(listing));
    });

    server.Get(R"(/stories/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto bytes = repository.fetch(parse_id(req.matches[1]));
      res.status = 200;
      res.set_content(bytes, std::string(kPackageMediaType));
    });

    server.Get(R"(/stories/([^/]+)/meta)", [this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, repo::to_json(repository.meta(parse_id(req.matches[1]))));
    });

    server.Get(R"(/stories/([^/]+)/lineage)", [this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, lineage_json(repository.lineage(parse_id(req.matches[1]))));
    });

    server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, remix::to_json(repository.stats()));
    });

    server.Post("/assets", [this](const httplib::Request& req, httplib::Response& res) {
      const auto name = param(req, "name");
      if (!name || name->empty()) throw repo::RepositoryError(400, "BadRequest", "name is required");
      std::vector<std::string> tags;
      if (const auto t = param(req, "tags"); t && !t->empty()) tags = split(*t, ',');
      layout::Aabb bounds = layout::kUnitCube;
      const auto lo = param(req, "bounds_min");
      const auto hi = param(req, "bounds_max");
      if (lo.has_value() != hi.has_value())
        throw repo::RepositoryError(400, "BadRequest", "bounds_min and bounds_max go together");
      if (lo) bounds = {parse_vec3(*lo, "bounds_min"), parse_vec3(*hi, "bounds_max")};
      const auto key_before = repository.assets().size();
      const auto key = repository.assets().put_asset(req.body, *name, std::move(tags), bounds);
      const bool created = repository.assets().size() != key_before;
      send_json(res, created ? 201 : 200, {{"asset_key", key}, {"created", created}});
    });

    server.Get(R"(/assets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string key = req.matches[1];
      if (!is_story_id_hex(key)) throw repo::RepositoryError(400, "BadRequest", "malformed asset key");
      res.status = 200;
      res.set_content(repository.assets().get_asset(key), "application/octet-stream");
    });

    server.Get("/assets", [this](const httplib::Request& req, httplib::Response& res) {
      const auto limit_param = param(req, "limit");
      const auto limit = limit_param ? parse_int(*limit_param, "limit") : 10;
      if (limit < 1 || limit > 100) throw repo::RepositoryError(400, "BadRequest", "limit must be in [1, 100]");
      json results = json::array();
      for (const auto& r : repository.assets().search(param(req, "q").value_or(""), static_cast<int>(limit)))
        results.push_back(catalog::to_json(r));
      send_json(res, 200, {{"results", std::move(results)}});
    });
  }
};

HttpService::HttpService(repo::Repository& repository, std::ostream* log, std::int64_t default_page_size)
    : impl_(std::make_unique<Impl>(repository, log,
                                   std::min(default_page_size, repository.page_size_cap()))) {}

HttpService::~HttpService() = default;

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

bool HttpService::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::serve() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

struct BackgroundServer::Thread {
  std::thread t;
};

BackgroundServer::BackgroundServer(repo::Repository& repository, std::ostream* log)
    : service_(repository, log), thread_(std::make_unique<Thread>()) {
  port_ = service_.bind_any_port("127.0.0.1");
  if (port_ < 0) throw std::runtime_error("cannot bind a loopback port");
  thread_->t = std::thread([this] { service_.serve(); });
  service_.wait_until_ready();
}

BackgroundServer::~BackgroundServer() {
  service_.stop();
  if (thread_->t.joinable()) thread_->t.join();
}

}  // namespace microar::service
