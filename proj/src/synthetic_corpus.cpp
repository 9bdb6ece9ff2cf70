#include "microar/synthetic_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "microar/digest.hpp"
#include "microar/remix_engine.hpp"

namespace microar::corpus {

namespace {

constexpr int kCreators = 24;
constexpr std::int64_t kEpoch = 1'600'000'000;

// rng() % n rather than std distributions, whose output is implementation-defined.
struct Rng {
  std::mt19937_64 gen;
  std::uint64_t below(std::uint64_t n) { return gen() % n; }
  double unit() { return static_cast<double>(gen() >> 11) / 9007199254740992.0; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

struct Plan {
  bool remix = false;
  int parent = -1;  // index into the plan
  int scenes = 0;   // originals only
  int objects = 0;  // originals: own objects; remixes: parent's plus one
  std::string creator;
  bool has_children = false;
};

void check_targets(const CorpusTargets& t) {
  const int originals = t.stories - t.remixes;
  const bool ok = t.stories > 0 && t.remixes >= 0 && originals >= 1 && t.self_remixes >= 0 &&
                  t.self_remixes <= t.remixes && t.one_scene >= 0 && t.two_scene >= 0 && t.three_plus >= 0 &&
                  t.one_scene + t.two_scene + t.three_plus == originals && t.max_scenes >= 1 &&
                  (t.three_plus == 0 || t.max_scenes >= 3) && t.unique_assets >= 1;
  if (!ok) throw std::invalid_argument("synthetic corpus: inconsistent targets");
  const int top = t.three_plus > 0 ? t.max_scenes : t.two_scene > 0 ? 2 : 1;
  if (top != t.max_scenes) throw std::invalid_argument("synthetic corpus: max_scenes not reachable");
}

PlacedObject fresh_object(Rng& rng, const std::string& asset_key, int asset_index) {
  PlacedObject o;
  o.object_id = ObjectId(rng.gen(), rng.gen());
  o.asset = {asset_key, "asset-" + std::to_string(asset_index)};
  const double half_yaw = rng.range(-1.5, 1.5);
  o.transform = quantize_transform({rng.range(-1.0, 1.0), 0.0, rng.range(-1.0, 1.0)},
                                   {std::cos(half_yaw), 0.0, std::sin(half_yaw), 0.0}, rng.range(0.5, 2.0));
  if (rng.below(4) == 0) o.dialog = make_dialog("line " + std::to_string(rng.below(1000)));
  return o;
}

}  // namespace

std::vector<Story> synthetic_corpus(const CorpusTargets& t, std::uint64_t seed) {
  check_targets(t);
  Rng rng{std::mt19937_64(seed)};

  // Remix slots are spread over positions 1..stories-1 so the first is an original.
  std::vector<Plan> plan(static_cast<std::size_t>(t.stories));
  {
    std::vector<int> slots(static_cast<std::size_t>(t.stories - 1));
    std::iota(slots.begin(), slots.end(), 1);
    std::shuffle(slots.begin(), slots.end(), rng.gen);
    for (int i = 0; i < t.remixes; ++i) plan[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)])].remix = true;
  }

  // Original scene counts: exact buckets, one story pinned at max_scenes.
  std::vector<int> scene_counts;
  scene_counts.insert(scene_counts.end(), static_cast<std::size_t>(t.one_scene), 1);
  scene_counts.insert(scene_counts.end(), static_cast<std::size_t>(t.two_scene), 2);
  for (int i = 0; i < t.three_plus; ++i)
    scene_counts.push_back(i == 0 ? t.max_scenes : 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t.max_scenes - 2))));
  if (t.three_plus == 0 && !scene_counts.empty()) std::sort(scene_counts.begin(), scene_counts.end());
  std::shuffle(scene_counts.begin(), scene_counts.end(), rng.gen);

  std::vector<int> self_flags(static_cast<std::size_t>(t.remixes), 0);
  std::fill_n(self_flags.begin(), t.self_remixes, 1);
  std::shuffle(self_flags.begin(), self_flags.end(), rng.gen);

  int next_scene = 0, next_remix = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto& p = plan[i];
    if (!p.remix) {
      p.scenes = scene_counts[static_cast<std::size_t>(next_scene++)];
      p.objects = p.scenes + static_cast<int>(rng.below(5));
      p.creator = "p" + std::to_string(1 + rng.below(kCreators));
      continue;
    }
    p.parent = static_cast<int>(rng.below(i));
    auto& parent = plan[static_cast<std::size_t>(p.parent)];
    parent.has_children = true;
    p.objects = parent.objects + 1;
    if (self_flags[static_cast<std::size_t>(next_remix++)]) {
      p.creator = parent.creator;
    } else {
      const auto offset = 1 + rng.below(kCreators - 1);
      const int parent_n = std::stoi(parent.creator.substr(1));
      p.creator = "p" + std::to_string(1 + (parent_n - 1 + static_cast<int>(offset)) % kCreators);
    }
  }

  // Leaf originals absorb the gap to the object target; nothing inherits from them.
  auto total = [&] {
    int n = 0;
    for (auto& p : plan) {
      if (p.remix) p.objects = plan[static_cast<std::size_t>(p.parent)].objects + 1;
      n += p.objects;
    }
    return n;
  };
  int gap = t.placed_objects - total();
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (!plan[i].remix && !plan[i].has_children) leaves.push_back(i);
  for (std::size_t k = 0; gap != 0 && !leaves.empty(); k = (k + 1) % leaves.size()) {
    auto& p = plan[leaves[k]];
    if (gap > 0) {
      ++p.objects;
      --gap;
    } else if (p.objects > 1) {
      --p.objects;
      ++gap;
    } else if (std::all_of(leaves.begin(), leaves.end(), [&](std::size_t i) { return plan[i].objects <= 1; })) {
      break;
    }
  }
  if (total() != t.placed_objects) throw std::invalid_argument("synthetic corpus: placed_objects not reachable");

  // Fresh object slots cover every asset at least once.
  int fresh = 0;
  for (const auto& p : plan) fresh += p.remix ? 1 : p.objects;
  if (fresh < t.unique_assets) throw std::invalid_argument("synthetic corpus: too few objects for unique_assets");
  std::vector<int> asset_of_slot(static_cast<std::size_t>(fresh));
  for (int i = 0; i < fresh; ++i)
    asset_of_slot[static_cast<std::size_t>(i)] =
        i < t.unique_assets ? i : static_cast<int>(rng.below(static_cast<std::uint64_t>(t.unique_assets)));
  std::shuffle(asset_of_slot.begin(), asset_of_slot.end(), rng.gen);
  std::vector<std::string> keys;
  for (int a = 0; a < t.unique_assets; ++a) keys.push_back(to_hex(sha256("synthetic-asset-" + std::to_string(a))));

  std::vector<Story> out;
  out.reserve(plan.size());
  std::size_t slot = 0;
  auto take_object = [&] {
    const int a = asset_of_slot[slot++];
    return fresh_object(rng, keys[static_cast<std::size_t>(a)], a);
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& p = plan[i];
    const auto created_at = kEpoch + static_cast<std::int64_t>(i) * 3600;
    Story s;
    if (p.remix) {
      s = remix::derive_remix(out[static_cast<std::size_t>(p.parent)], p.creator, created_at);
      auto& scene = s.scenes[rng.below(s.scenes.size())];
      scene.objects.push_back(take_object());
    } else {
      auto& m = s.metadata;
      m.creator = p.creator;
      m.original_creator = p.creator;
      m.created_at = created_at;
      for (int k = 0; k < p.scenes; ++k) {
        Scene scene;
        scene.scene_id = SceneId(rng.gen(), rng.gen());
        scene.index = k;
        s.scenes.push_back(std::move(scene));
      }
      // Every scene gets one object before the rest are scattered.
      for (int k = 0; k < p.objects; ++k) {
        const auto at = k < p.scenes ? static_cast<std::size_t>(k) : rng.below(s.scenes.size());
        s.scenes[at].objects.push_back(take_object());
      }
    }
    s.metadata.title = "story " + std::to_string(i);
    s.metadata.description = p.remix ? "remix of story " + std::to_string(p.parent) : "original";
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace microar::corpus
