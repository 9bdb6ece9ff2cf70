#include "microar/story_listing.hpp"

namespace microar::repo {

using nlohmann::json;

json to_json(const StoryListing& l) {
  json j = {{"story_id", l.story_id.hex()},
            {"title", l.title},
            {"creator", l.creator},
            {"original_creator", l.original_creator},
            {"description", l.description},
            {"scene_count", l.scene_count},
            {"created_at", l.created_at},
            {"view_count", l.view_count}};
  if (l.parent_story) j["parent_story"] = l.parent_story->hex();
  return j;
}

StoryListing listing_from_json(const json& j) {
  StoryListing l{StoryId::parse(j.at("story_id").get<std::string>()), {}, {}, {}, {}, 0, 0, std::nullopt, 0};
  l.title = j.at("title").get<std::string>();
  l.creator = j.at("creator").get<std::string>();
  l.original_creator = j.at("original_creator").get<std::string>();
  l.description = j.at("description").get<std::string>();
  l.scene_count = j.at("scene_count").get<std::int64_t>();
  l.created_at = j.at("created_at").get<std::int64_t>();
  l.view_count = j.at("view_count").get<std::int64_t>();
  if (auto it = j.find("parent_story"); it != j.end() && !it->is_null())
    l.parent_story = StoryId::parse(it->get<std::string>());
  return l;
}

json to_json(const ListingPage& p) {
  json items = json::array();
  for (const auto& l : p.items) items.push_back(to_json(l));
  return {{"page", p.page},
          {"page_size", p.page_size},
          {"total", p.total},
          {"total_pages", p.total_pages},
          {"items", std::move(items)}};
}

}  // namespace microar::repo
