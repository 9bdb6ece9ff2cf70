#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/core_model.hpp"

namespace microar::remix {

// Object-level changes between a parent story and a descendant. Metadata is
// not compared: every remix retitles by definition.
struct StoryDiff {
  std::vector<ObjectId> objects_added;
  std::vector<ObjectId> objects_removed;
  std::vector<ObjectId> objects_transformed;
  std::vector<ObjectId> dialogs_edited;
  int scenes_added = 0;
  int scenes_removed = 0;
  bool scenes_reordered = false;

  bool empty() const;
  friend bool operator==(const StoryDiff&, const StoryDiff&) = default;
};

struct SceneCountHistogram {
  std::int64_t one = 0;
  std::int64_t two = 0;
  std::int64_t three_plus = 0;
  std::int64_t max = 0;

  friend bool operator==(const SceneCountHistogram&, const SceneCountHistogram&) = default;
};

struct CorpusStats {
  std::int64_t total_stories = 0;
  std::int64_t remix_count = 0;
  std::int64_t self_remix_count = 0;
  double remix_ratio = 0.0;
  double self_remix_share = 0.0;
  // Buckets count original (non-remix) stories; max spans the whole corpus.
  SceneCountHistogram scene_count_histogram;
  std::int64_t unique_assets = 0;
  std::int64_t total_asset_instances = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

enum class LineageErrorKind { kBrokenLineage, kCyclicLineage };

class LineageError : public std::runtime_error {
 public:
  LineageError(LineageErrorKind kind, const StoryId& at);
  LineageErrorKind kind() const { return kind_; }
  const StoryId& at() const { return at_; }

 private:
  LineageErrorKind kind_;
  StoryId at_;
};

// Copies the parent's scenes (ids preserved) into a draft owned by new_creator.
// Title and description are left empty for the remixer to fill in.
Story derive_remix(const Story& parent, const std::string& new_creator, std::int64_t created_at);

StoryDiff diff(const Story& parent, const Story& child);

using StoryLookup = std::function<std::optional<Story>(const StoryId&)>;

// Chain from the root to `id`, inclusive.
std::vector<std::pair<StoryId, Story>> lineage(const StoryLookup& lookup, const StoryId& id);

bool is_self_remix(const Story& story);

CorpusStats corpus_stats(const std::vector<Story>& stories);

nlohmann::json to_json(const CorpusStats& stats);
nlohmann::json to_json(const StoryDiff& diff);

}  // namespace microar::remix
