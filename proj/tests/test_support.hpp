#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "microar/core_model.hpp"
#include "microar/layout_engine.hpp"

namespace microar::testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

Transform random_transform(std::mt19937_64& rng);

struct StoryShape {
  int min_scenes = 1;
  int max_scenes = 6;
  int max_objects_per_scene = 6;
};

// Random draft- and publish-valid root story.
Story random_story(std::mt19937_64& rng, const StoryShape& shape = {});

// One scene with a single unit-cube object at the origin.
Story minimal_story(const std::string& creator = "alice");

PlacedObject make_object(std::mt19937_64& rng, const std::string& key, const Transform& t = Transform());

std::string random_text(std::mt19937_64& rng, std::size_t max_len);

Plane make_plane(double width, double depth, SurfaceClass cls = SurfaceClass::kTable);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& bytes);

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv through /bin/sh with every argument single-quoted; `env` entries
// are NAME=value pairs prepended via env(1).
CommandResult run_command(const std::vector<std::string>& argv, const std::vector<std::string>& env = {});

}  // namespace microar::testing
