#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "microar/package_format.hpp"
#include "microar/remix_engine.hpp"
#include "test_support.hpp"

using namespace microar;
using namespace microar::remix;
using microar::testing::make_object;
using microar::testing::minimal_story;
using microar::testing::random_story;

namespace {

struct MapLookup {
  std::map<StoryId, Story> stories;

  StoryId add(const Story& s) {
    const auto id = story_id(s);
    stories.emplace(id, s);
    return id;
  }
  StoryLookup fn() const {
    return [this](const StoryId& id) -> std::optional<Story> {
      auto it = stories.find(id);
      if (it == stories.end()) return std::nullopt;
      return it->second;
    };
  }
};

Story publishable_remix(const Story& parent, const std::string& creator, const std::string& title) {
  auto child = derive_remix(parent, creator, parent.metadata.created_at + 60);
  child.metadata.title = title;
  child.metadata.description = "remixed";
  return child;
}

}  // namespace

TEST_CASE("derive_remix copies scenes and records lineage") {
  const auto parent = minimal_story("p5");
  const auto child = derive_remix(parent, "p14", 1'700'000'000);
  CHECK(child.scenes == parent.scenes);
  CHECK(child.metadata.creator == "p14");
  CHECK(child.metadata.original_creator == "p5");
  CHECK(child.metadata.parent_story == story_id(parent));
  CHECK(child.metadata.parent_creator == "p5");
  CHECK(child.metadata.title.empty());
  CHECK(child.metadata.description.empty());
  CHECK(validate_story(child, ValidationMode::kDraft).empty());
  CHECK_FALSE(validate_story(child, ValidationMode::kPublish).empty());
}

TEST_CASE("self-remix classification") {
  const auto root = minimal_story("p5");
  CHECK_FALSE(is_self_remix(root));
  CHECK(is_self_remix(derive_remix(root, "p5", 1)));
  CHECK_FALSE(is_self_remix(derive_remix(root, "p14", 1)));
}

TEST_CASE("remix of a remix keeps the root's original creator") {
  const auto root = minimal_story("p5");
  const auto first = publishable_remix(root, "p14", "first");
  const auto second = publishable_remix(first, "p2", "second");
  CHECK(second.metadata.original_creator == "p5");
  CHECK(second.metadata.parent_creator == "p14");
  CHECK(is_self_remix(publishable_remix(first, "p14", "again")));
}

TEST_CASE("diff of a fresh remix against its parent is empty") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_story(rng);
    CHECK(diff(s, s).empty());
    CHECK(diff(s, derive_remix(s, "someone", 5)).empty());
  }
}

TEST_CASE("diff reports an added scene") {
  std::mt19937_64 rng(2);
  const auto parent = random_story(rng, {5, 5, 3});
  auto child = derive_remix(parent, "p14", 2);
  Scene extra;
  extra.scene_id = SceneId::random(rng);
  extra.index = 5;
  extra.objects.push_back(make_object(rng, "robot-cat"));
  child.scenes.push_back(extra);
  const auto d = diff(parent, child);
  CHECK(d.scenes_added == 1);
  CHECK(d.scenes_removed == 0);
  CHECK_FALSE(d.scenes_reordered);
  CHECK(d.objects_added == std::vector<ObjectId>{extra.objects[0].object_id});
}

TEST_CASE("diff reports moved, edited, removed objects and reordered scenes") {
  std::mt19937_64 rng(3);
  const auto parent = random_story(rng, {3, 3, 3});
  auto child = parent;
  // Ensure every scene has an object to work with.
  for (auto& s : child.scenes) {
    if (s.objects.empty()) s.objects.push_back(make_object(rng, "x"));
  }
  const auto base = child;

  auto& moved = child.scenes[0].objects[0];
  const auto p = moved.transform.position();
  moved.transform = quantize_transform({p.x + 1.0, p.y, p.z}, moved.transform.rotation(), moved.transform.scale());
  auto& talking = child.scenes[1].objects[0];
  talking.dialog = make_dialog("Raawr");
  const auto removed = child.scenes[2].objects[0].object_id;
  child.scenes[2].objects.erase(child.scenes[2].objects.begin());

  const auto d = diff(base, child);
  CHECK(d.objects_transformed == std::vector<ObjectId>{moved.object_id});
  CHECK(d.dialogs_edited == std::vector<ObjectId>{talking.object_id});
  CHECK(d.objects_removed == std::vector<ObjectId>{removed});
  CHECK(d.objects_added.empty());
  CHECK_FALSE(d.scenes_reordered);

  std::swap(child.scenes[0], child.scenes[2]);
  CHECK(diff(base, child).scenes_reordered);
}

TEST_CASE("deleting and re-adding an identical object is remove + add") {
  std::mt19937_64 rng(4);
  const auto parent = minimal_story();
  auto child = parent;
  auto replacement = child.scenes[0].objects[0];
  replacement.object_id = ObjectId::random(rng);
  child.scenes[0].objects = {replacement};
  const auto d = diff(parent, child);
  CHECK(d.objects_added.size() == 1);
  CHECK(d.objects_removed.size() == 1);
  CHECK(d.objects_transformed.empty());
}

TEST_CASE("lineage walks from the root") {
  MapLookup repo;
  const auto root = minimal_story("p5");
  const auto root_id = repo.add(root);
  CHECK(lineage(repo.fn(), root_id).size() == 1);

  const auto first = publishable_remix(root, "p14", "first");
  const auto first_id = repo.add(first);
  const auto second = publishable_remix(first, "p5", "second");
  const auto second_id = repo.add(second);
  const auto chain = lineage(repo.fn(), second_id);
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].first == root_id);
  CHECK(chain[1].first == first_id);
  CHECK(chain[2].first == second_id);
  CHECK(chain[1].second.metadata.parent_story == root_id);
}

TEST_CASE("lineage errors") {
  MapLookup repo;
  const auto root = minimal_story("p5");
  const auto orphan = publishable_remix(root, "p14", "orphan");  // parent never added
  const auto orphan_id = repo.add(orphan);
  try {
    lineage(repo.fn(), orphan_id);
    FAIL("expected BrokenLineage");
  } catch (const LineageError& e) {
    CHECK(e.kind() == LineageErrorKind::kBrokenLineage);
    CHECK(e.at() == story_id(root));
  }

  // Content addressing makes real cycles impossible; a forged lookup can still produce one.
  const auto a = StoryId::parse(std::string(64, 'a'));
  const auto b = StoryId::parse(std::string(64, 'b'));
  auto sa = minimal_story("x");
  sa.metadata.parent_story = b;
  sa.metadata.parent_creator = "x";
  auto sb = minimal_story("x");
  sb.metadata.parent_story = a;
  sb.metadata.parent_creator = "x";
  const StoryLookup forged = [&](const StoryId& id) -> std::optional<Story> { return id == a ? sa : sb; };
  try {
    lineage(forged, a);
    FAIL("expected CyclicLineage");
  } catch (const LineageError& e) {
    CHECK(e.kind() == LineageErrorKind::kCyclicLineage);
  }
}

TEST_CASE("corpus_stats on an empty corpus is all zeros") { CHECK(corpus_stats({}) == CorpusStats{}); }

TEST_CASE("corpus_stats counts remixes, self-remixes, scenes and assets") {
  std::mt19937_64 rng(5);
  std::vector<Story> corpus;
  const auto a = random_story(rng, {1, 1, 2});
  const auto b = random_story(rng, {2, 2, 2});
  const auto c = random_story(rng, {4, 4, 2});
  corpus = {a, b, c, publishable_remix(a, a.metadata.creator, "self"), publishable_remix(b, "other", "other")};
  const auto s = corpus_stats(corpus);
  CHECK(s.total_stories == 5);
  CHECK(s.remix_count == 2);
  CHECK(s.self_remix_count == 1);
  CHECK(s.remix_ratio == doctest::Approx(0.4));
  CHECK(s.self_remix_share == doctest::Approx(0.5));
  CHECK(s.scene_count_histogram == SceneCountHistogram{1, 1, 1, 4});
  std::set<std::string> keys;
  std::int64_t instances = 0;
  for (const auto& st : corpus)
    for (const auto& sc : st.scenes)
      for (const auto& o : sc.objects) {
        keys.insert(o.asset.asset_key);
        ++instances;
      }
  CHECK(s.unique_assets == static_cast<std::int64_t>(keys.size()));
  CHECK(s.total_asset_instances == instances);
}

TEST_CASE("corpus_stats ratios for the study-sized counts") {
  // 48 of 194 stories are remixes and 11 of those are self-remixes.
  std::mt19937_64 rng(6);
  std::vector<Story> corpus;
  for (int i = 0; i < 146; ++i) corpus.push_back(random_story(rng, {1, 3, 1}));
  for (int i = 0; i < 48; ++i) {
    const auto& parent = corpus[static_cast<std::size_t>(i)];
    corpus.push_back(publishable_remix(parent, i < 11 ? parent.metadata.creator : "someone-else", "r"));
  }
  const auto s = corpus_stats(corpus);
  CHECK(s.remix_ratio == doctest::Approx(0.2474).epsilon(0.0001 / 0.2474));
  CHECK(s.self_remix_share == doctest::Approx(0.2292).epsilon(0.0001 / 0.2292));
}

TEST_CASE("StoryDiff and CorpusStats serialize to JSON") {
  const auto j = to_json(corpus_stats({minimal_story()}));
  CHECK(j["total_stories"] == 1);
  CHECK(j["scene_count_histogram"]["one"] == 1);
  const auto d = to_json(diff(minimal_story(), minimal_story()));
  CHECK(d["objects_added"].empty());
  CHECK(d["scenes_reordered"] == false);
}
