#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/core_model.hpp"
#include "microar/layout_engine.hpp"

namespace microar::catalog {

struct AssetRecord {
  std::string asset_key;  // sha-256 hex of the blob
  std::string display_name;
  std::vector<std::string> tags;  // lowercase
  std::uint64_t blob_size = 0;
  layout::Aabb bounds;

  friend bool operator==(const AssetRecord&, const AssetRecord&) = default;
};

class NotFound : public std::runtime_error {
 public:
  explicit NotFound(const std::string& key) : std::runtime_error("asset not found: " + key) {}
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const AssetRecord& record);
AssetRecord record_from_json(const nlohmann::json& j);

// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

// Content-addressed asset store. With a root directory, blobs live at
// blobs/<first2>/<key> and records are appended to index.log as canonical
// JSON lines, replayed on open. Without one, everything stays in memory.
class AssetCatalog {
 public:
  AssetCatalog();
  explicit AssetCatalog(std::filesystem::path root);

  AssetCatalog(const AssetCatalog&) = delete;
  AssetCatalog& operator=(const AssetCatalog&) = delete;

  // Idempotent; the first record stored for a key wins. Throws
  // std::invalid_argument on an empty blob or invalid bounds.
  std::string put_asset(std::string_view blob, const std::string& display_name, std::vector<std::string> tags,
                        const layout::Aabb& bounds = layout::kUnitCube);

  // Exact bytes, re-verified against the key. Throws NotFound / IntegrityError.
  std::string get_asset(const std::string& key) const;

  std::optional<AssetRecord> find(const std::string& key) const;

  // Ranked by matched query tokens desc, then display_name asc, then key asc.
  // Throws std::invalid_argument when limit <= 0.
  std::vector<AssetRecord> search(std::string_view query, int limit) const;

  std::size_t size() const;
  std::vector<AssetRecord> records() const;

  // Bounds lookup for layout computations; unknown keys fall back to the unit cube.
  layout::BoundsLookup bounds_lookup() const;

 private:
  void replay();

  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, AssetRecord> records_;
  std::map<std::string, std::string> memory_blobs_;  // in-memory mode only
  std::ofstream journal_;
};

// Placeholder assets that ship with the tools for offline authoring.
struct BuiltinAsset {
  std::string_view name;
  std::vector<std::string> tags;
  layout::Aabb bounds;
};

const std::vector<BuiltinAsset>& builtin_assets();
std::string builtin_blob(std::string_view name);
void install_builtin_assets(AssetCatalog& catalog);

// Keys in first-use order (scene order, then object order), deduplicated.
std::vector<std::string> prefetch_plan(const Story& story);

}  // namespace microar::catalog
