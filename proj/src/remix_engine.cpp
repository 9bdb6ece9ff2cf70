#include "microar/remix_engine.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "microar/package_format.hpp"

namespace microar::remix {

namespace {

std::string_view to_string(LineageErrorKind kind) {
  return kind == LineageErrorKind::kBrokenLineage ? "BrokenLineage" : "CyclicLineage";
}

nlohmann::json id_list(const std::vector<ObjectId>& ids) {
  auto out = nlohmann::json::array();
  for (const auto& id : ids) out.push_back(id.hex());
  return out;
}

}  // namespace

bool StoryDiff::empty() const {
  return objects_added.empty() && objects_removed.empty() && objects_transformed.empty() && dialogs_edited.empty() &&
         scenes_added == 0 && scenes_removed == 0 && !scenes_reordered;
}

LineageError::LineageError(LineageErrorKind kind, const StoryId& at)
    : std::runtime_error(std::string(to_string(kind)) + " at " + at.hex()), kind_(kind), at_(at) {}

Story derive_remix(const Story& parent, const std::string& new_creator, std::int64_t created_at) {
  Story child;
  child.scenes = parent.scenes;
  auto& m = child.metadata;
  m.creator = new_creator;
  m.original_creator = parent.metadata.original_creator;
  m.created_at = created_at;
  m.parent_story = story_id(parent);
  m.parent_creator = parent.metadata.creator;
  m.placement_hints = parent.metadata.placement_hints;
  m.format_version = kCurrentFormatVersion;
  return child;
}

StoryDiff diff(const Story& parent, const Story& child) {
  std::map<ObjectId, const PlacedObject*> before;
  for (const auto& scene : parent.scenes) {
    for (const auto& obj : scene.objects) before.emplace(obj.object_id, &obj);
  }
  std::set<ObjectId> seen;

  StoryDiff d;
  for (const auto& scene : child.scenes) {
    for (const auto& obj : scene.objects) {
      seen.insert(obj.object_id);
      auto it = before.find(obj.object_id);
      if (it == before.end()) {
        d.objects_added.push_back(obj.object_id);
        continue;
      }
      if (it->second->transform != obj.transform) d.objects_transformed.push_back(obj.object_id);
      if (it->second->dialog != obj.dialog) d.dialogs_edited.push_back(obj.object_id);
    }
  }
  for (const auto& scene : parent.scenes) {
    for (const auto& obj : scene.objects) {
      if (!seen.count(obj.object_id)) d.objects_removed.push_back(obj.object_id);
    }
  }

  std::set<SceneId> parent_scenes;
  std::set<SceneId> child_scenes;
  for (const auto& s : parent.scenes) parent_scenes.insert(s.scene_id);
  for (const auto& s : child.scenes) child_scenes.insert(s.scene_id);

  std::vector<SceneId> shared_in_parent;
  std::vector<SceneId> shared_in_child;
  for (const auto& s : parent.scenes) {
    if (child_scenes.count(s.scene_id)) {
      shared_in_parent.push_back(s.scene_id);
    } else {
      ++d.scenes_removed;
    }
  }
  for (const auto& s : child.scenes) {
    if (parent_scenes.count(s.scene_id)) {
      shared_in_child.push_back(s.scene_id);
    } else {
      ++d.scenes_added;
    }
  }
  d.scenes_reordered = shared_in_parent != shared_in_child;
  return d;
}

std::vector<std::pair<StoryId, Story>> lineage(const StoryLookup& lookup, const StoryId& id) {
  std::vector<std::pair<StoryId, Story>> chain;
  std::set<StoryId> visited;
  std::optional<StoryId> cursor = id;
  while (cursor) {
    if (!visited.insert(*cursor).second) throw LineageError(LineageErrorKind::kCyclicLineage, *cursor);
    auto story = lookup(*cursor);
    if (!story) throw LineageError(LineageErrorKind::kBrokenLineage, *cursor);
    auto next = story->metadata.parent_story;
    chain.emplace_back(*cursor, std::move(*story));
    cursor = std::move(next);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

bool is_self_remix(const Story& story) {
  const auto& m = story.metadata;
  return m.parent_story.has_value() && m.parent_creator.has_value() && *m.parent_creator == m.creator;
}

CorpusStats corpus_stats(const std::vector<Story>& stories) {
  CorpusStats s;
  std::unordered_set<std::string> assets;
  for (const auto& story : stories) {
    ++s.total_stories;
    const auto scenes = static_cast<std::int64_t>(story.scenes.size());
    s.scene_count_histogram.max = std::max(s.scene_count_histogram.max, scenes);
    if (story.metadata.parent_story) {
      ++s.remix_count;
      if (is_self_remix(story)) ++s.self_remix_count;
    } else if (scenes == 1) {
      ++s.scene_count_histogram.one;
    } else if (scenes == 2) {
      ++s.scene_count_histogram.two;
    } else if (scenes >= 3) {
      ++s.scene_count_histogram.three_plus;
    }
    for (const auto& scene : story.scenes) {
      for (const auto& obj : scene.objects) {
        ++s.total_asset_instances;
        assets.insert(obj.asset.asset_key);
      }
    }
  }
  s.unique_assets = static_cast<std::int64_t>(assets.size());
  if (s.total_stories > 0) s.remix_ratio = static_cast<double>(s.remix_count) / static_cast<double>(s.total_stories);
  if (s.remix_count > 0) {
    s.self_remix_share = static_cast<double>(s.self_remix_count) / static_cast<double>(s.remix_count);
  }
  return s;
}

nlohmann::json to_json(const CorpusStats& s) {
  const auto& h = s.scene_count_histogram;
  return {{"total_stories", s.total_stories},
          {"remix_count", s.remix_count},
          {"self_remix_count", s.self_remix_count},
          {"remix_ratio", s.remix_ratio},
          {"self_remix_share", s.self_remix_share},
          {"scene_count_histogram", {{"one", h.one}, {"two", h.two}, {"three_plus", h.three_plus}, {"max", h.max}}},
          {"unique_assets", s.unique_assets},
          {"total_asset_instances", s.total_asset_instances}};
}

nlohmann::json to_json(const StoryDiff& d) {
  return {{"objects_added", id_list(d.objects_added)},
          {"objects_removed", id_list(d.objects_removed)},
          {"objects_transformed", id_list(d.objects_transformed)},
          {"dialogs_edited", id_list(d.dialogs_edited)},
          {"scenes_added", d.scenes_added},
          {"scenes_removed", d.scenes_removed},
          {"scenes_reordered", d.scenes_reordered}};
}

}  // namespace microar::remix
