#pragma once

#include <cstdint>
#include <vector>

#include "microar/core_model.hpp"

namespace microar::corpus {

// Exact counts the generated corpus must hit. Scene buckets count original
// stories only; remixes inherit their parent's scenes.
struct CorpusTargets {
  int stories = 194;
  int remixes = 48;
  int self_remixes = 11;
  int one_scene = 38;
  int two_scene = 47;
  int three_plus = 61;
  int max_scenes = 10;
  int unique_assets = 325;
  int placed_objects = 1204;
};

// Publish-valid stories in an order where every parent precedes its remixes.
// Each remix adds exactly one object to its parent. Identical (targets, seed)
// give byte-identical packages. Throws std::invalid_argument when the targets
// cannot be met.
std::vector<Story> synthetic_corpus(const CorpusTargets& targets, std::uint64_t seed);

}  // namespace microar::corpus
