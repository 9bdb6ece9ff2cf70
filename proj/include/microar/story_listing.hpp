#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/core_model.hpp"
#include "microar/remix_engine.hpp"

// Wire types shared by the repository server and its clients.
namespace microar::repo {

struct StoryListing {
  StoryId story_id;
  std::string title;
  std::string creator;
  std::string original_creator;
  std::string description;
  std::int64_t scene_count = 0;
  std::int64_t created_at = 0;
  std::optional<StoryId> parent_story;
  std::int64_t view_count = 0;

  friend bool operator==(const StoryListing&, const StoryListing&) = default;
};

nlohmann::json to_json(const StoryListing& listing);
StoryListing listing_from_json(const nlohmann::json& j);

struct PublishResult {
  StoryId story_id;
  bool created = false;
};

struct ListingPage {
  std::int64_t page = 1;
  std::int64_t page_size = 0;
  std::int64_t total = 0;
  std::int64_t total_pages = 0;
  std::vector<StoryListing> items;
};

nlohmann::json to_json(const ListingPage& page);

struct LineageEntry {
  StoryListing listing;
  std::optional<remix::StoryDiff> diff_from_parent;  // absent for the root
};

}  // namespace microar::repo
