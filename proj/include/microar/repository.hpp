#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/asset_catalog.hpp"
#include "microar/core_model.hpp"
#include "microar/remix_engine.hpp"
#include "microar/story_listing.hpp"

namespace microar::repo {

// Every failure a caller can observe, tagged with the HTTP status it maps to.
class RepositoryError : public std::runtime_error {
 public:
  RepositoryError(int status, std::string code, const std::string& message, std::vector<Violation> violations = {});

  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const std::vector<Violation>& violations() const { return violations_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  std::vector<Violation> violations_;
};

inline constexpr std::int64_t kDefaultPageSizeCap = 100;

// Published packages live at packages/<first2>/<id>.mar; journal.log holds one
// canonical JSON line per publish or view event and is replayed on open.
// Readers work against an immutable index snapshot; writers serialize on a
// single mutex and swap in a new snapshot.
class Repository {
 public:
  explicit Repository(std::filesystem::path root, std::int64_t page_size_cap = kDefaultPageSizeCap);
  ~Repository();

  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  // `creator` is the caller's claimed identity; when given it must match the
  // package's creator.
  PublishResult publish(std::string_view package, const std::optional<std::string>& creator = std::nullopt);

  ListingPage list(std::int64_t page, std::int64_t page_size, const std::optional<std::string>& creator) const;

  // Published bytes; counts one view.
  std::string fetch(const StoryId& id);

  StoryListing meta(const StoryId& id) const;
  std::vector<LineageEntry> lineage(const StoryId& id) const;
  remix::CorpusStats stats() const;

  std::size_t size() const;
  std::int64_t page_size_cap() const { return page_size_cap_; }

  catalog::AssetCatalog& assets() { return assets_; }
  const catalog::AssetCatalog& assets() const { return assets_; }

 private:
  struct Entry;
  struct Index;

  std::shared_ptr<const Index> snapshot() const;
  std::filesystem::path package_path(const StoryId& id) const;
  void replay();
  void append_journal(const nlohmann::json& event);

  std::filesystem::path root_;
  std::int64_t page_size_cap_;
  catalog::AssetCatalog assets_;

  mutable std::mutex snapshot_mutex_;  // guards the pointer swap only
  std::shared_ptr<const Index> index_;

  std::mutex write_mutex_;
  std::mutex journal_mutex_;
  std::ofstream journal_;
};

}  // namespace microar::repo
