#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/asset_catalog.hpp"
#include "microar/remix_engine.hpp"
#include "microar/story_listing.hpp"

namespace microar::client {

// status is 0 for transport failures; otherwise the HTTP status, with the
// server's response body kept verbatim.
class ClientError : public std::runtime_error {
 public:
  ClientError(int status, std::string body, const std::string& message);
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

struct AssetUpload {
  std::string asset_key;
  bool created = false;
};

// Blocking HTTP client for the repository REST API.
class RepositoryClient {
 public:
  // base_url like "http://127.0.0.1:8080".
  explicit RepositoryClient(const std::string& base_url);
  ~RepositoryClient();

  repo::PublishResult publish(const std::string& package, const std::optional<std::string>& creator);
  repo::ListingPage list(std::int64_t page, std::optional<std::int64_t> page_size,
                         const std::optional<std::string>& creator);
  std::string fetch(const StoryId& id);
  repo::StoryListing meta(const StoryId& id);
  std::vector<repo::LineageEntry> lineage(const StoryId& id);
  nlohmann::json stats();

  AssetUpload put_asset(const std::string& blob, const std::string& name, const std::vector<std::string>& tags);
  std::string get_asset(const std::string& key);
  std::vector<catalog::AssetRecord> search_assets(const std::string& query, int limit);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

remix::CorpusStats corpus_stats_from_json(const nlohmann::json& j);
remix::StoryDiff story_diff_from_json(const nlohmann::json& j);

}  // namespace microar::client
