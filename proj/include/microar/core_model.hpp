#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace microar {

// Thrown when a value type would be constructed with fields breaking its invariants.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Quat&, const Quat&) = default;
};

// 128-bit random identifier, rendered as 32 lowercase hex characters.
// The tag keeps object, scene and group ids from being mixed up.
template <typename Tag>
class Id128 {
 public:
  constexpr Id128() = default;
  constexpr Id128(std::uint64_t hi, std::uint64_t lo) : hi_(hi), lo_(lo) {}

  static Id128 random(std::mt19937_64& rng) { return Id128(rng(), rng()); }

  static Id128 parse(std::string_view hex);

  std::string hex() const;
  std::uint64_t hi() const { return hi_; }
  std::uint64_t lo() const { return lo_; }

  friend auto operator<=>(const Id128&, const Id128&) = default;

 private:
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
};

struct ObjectTag {};
struct SceneTag {};
struct GroupTag {};
using ObjectId = Id128<ObjectTag>;
using SceneId = Id128<SceneTag>;
using GroupId = Id128<GroupTag>;

// Parses exactly 32 lowercase hex characters into (hi, lo); throws InvariantError otherwise.
std::pair<std::uint64_t, std::uint64_t> parse_hex128(std::string_view hex);
std::string format_hex128(std::uint64_t hi, std::uint64_t lo);

template <typename Tag>
Id128<Tag> Id128<Tag>::parse(std::string_view hex) {
  auto [hi, lo] = parse_hex128(hex);
  return Id128(hi, lo);
}

template <typename Tag>
std::string Id128<Tag>::hex() const {
  return format_hex128(hi_, lo_);
}

using Digest = std::array<std::uint8_t, 32>;

// Content hash of a story's canonical package bytes.
class StoryId {
 public:
  static StoryId parse(std::string_view hex);
  static StoryId from_digest(const Digest& digest);

  const std::string& hex() const { return hex_; }

  friend auto operator<=>(const StoryId&, const StoryId&) = default;

 private:
  explicit StoryId(std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;
};

bool is_story_id_hex(std::string_view hex);

enum class SurfaceClass { kFloor, kTable, kCounter, kTubEdge, kOutdoor, kAny };

std::string_view to_string(SurfaceClass c);
std::optional<SurfaceClass> parse_surface_class(std::string_view s);

// Strictly positive plane-local extents, meters.
class Extents {
 public:
  Extents(double width, double depth);

  double width() const { return width_; }
  double depth() const { return depth_; }

  friend bool operator==(const Extents&, const Extents&) = default;

 private:
  double width_;
  double depth_;
};

struct PlacementHints {
  SurfaceClass surface_class = SurfaceClass::kAny;
  std::optional<Extents> min_extents;
  std::string note;

  friend bool operator==(const PlacementHints&, const PlacementHints&) = default;
};

struct FormatVersion {
  int major = 1;
  int minor = 0;

  friend bool operator==(const FormatVersion&, const FormatVersion&) = default;
};

inline constexpr FormatVersion kCurrentFormatVersion{1, 0};

struct Metadata {
  std::string creator;
  std::string title;
  std::string description;
  std::string original_creator;
  std::int64_t created_at = 0;
  std::optional<StoryId> parent_story;
  // Creator of the immediate parent, recorded when the remix is derived.
  std::optional<std::string> parent_creator;
  std::optional<PlacementHints> placement_hints;
  FormatVersion format_version = kCurrentFormatVersion;

  friend bool operator==(const Metadata&, const Metadata&) = default;
};

// Plane-local pose, stored on the canonical grid: position in micrometers,
// quaternion components in nano-units, uniform scale in parts-per-million.
class Transform {
 public:
  static constexpr std::int64_t kPositionUnitsPerMeter = 1'000'000;
  static constexpr std::int64_t kRotationUnits = 1'000'000'000;
  static constexpr std::int64_t kScaleUnits = 1'000'000;
  static constexpr double kMinScale = 0.01;
  static constexpr double kMaxScale = 100.0;
  static constexpr double kNormTolerance = 1e-9;

  // Identity pose.
  Transform();

  // Builds from already-scaled integers; throws InvariantError when the
  // quaternion is off the unit sphere or the scale is out of range.
  static Transform from_scaled(const std::array<std::int64_t, 3>& position_um,
                               const std::array<std::int64_t, 4>& rotation_nano,
                               std::int64_t scale_ppm);

  Vec3 position() const;
  Quat rotation() const;
  double scale() const;

  const std::array<std::int64_t, 3>& position_um() const { return position_um_; }
  const std::array<std::int64_t, 4>& rotation_nano() const { return rotation_nano_; }
  std::int64_t scale_ppm() const { return scale_ppm_; }

  friend bool operator==(const Transform&, const Transform&) = default;

 private:
  friend Transform quantize_transform(const Vec3&, const Quat&, double);

  std::array<std::int64_t, 3> position_um_{0, 0, 0};
  std::array<std::int64_t, 4> rotation_nano_{kRotationUnits, 0, 0, 0};
  std::int64_t scale_ppm_ = kScaleUnits;
};

// Snaps a raw pose to the canonical grid. The quaternion is renormalized and
// sign-canonicalized (first non-zero component positive); the scale is
// clamped to [0.01, 100]. Idempotent. Throws InvariantError on non-finite
// input, scale <= 0 or a zero quaternion.
Transform quantize_transform(const Vec3& position, const Quat& rotation, double scale);

struct AssetRef {
  std::string asset_key;
  std::string display_name;

  friend bool operator==(const AssetRef&, const AssetRef&) = default;
};

struct DialogBalloon {
  std::string text;
  Vec3 offset;  // quantized to micrometers like Transform positions

  friend bool operator==(const DialogBalloon&, const DialogBalloon&) = default;
};

// Builds a balloon with its offset snapped to the micrometer grid.
DialogBalloon make_dialog(std::string text, const Vec3& offset = {});

struct PlacedObject {
  ObjectId object_id;
  AssetRef asset;
  Transform transform;
  std::optional<GroupId> group_id;
  std::optional<DialogBalloon> dialog;

  friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

struct Scene {
  SceneId scene_id;
  int index = 0;
  std::vector<PlacedObject> objects;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Story {
  Metadata metadata;
  std::vector<Scene> scenes;

  friend bool operator==(const Story&, const Story&) = default;
};

struct Plane {
  Vec3 origin;
  double yaw = 0.0;
  Extents extents{1.0, 1.0};
  SurfaceClass surface_class = SurfaceClass::kAny;
};

class CameraPose {
 public:
  // Throws InvariantError unless fov is in (0, 180) degrees, aspect > 0 and
  // the orientation is a non-zero quaternion (it is normalized here).
  CameraPose(const Vec3& position, const Quat& orientation, double vertical_fov_deg, double aspect);

  const Vec3& position() const { return position_; }
  const Quat& orientation() const { return orientation_; }
  double vertical_fov_deg() const { return vertical_fov_deg_; }
  double aspect() const { return aspect_; }

 private:
  Vec3 position_;
  Quat orientation_;
  double vertical_fov_deg_;
  double aspect_;
};

enum class ValidationMode { kDraft, kPublish };

struct Violation {
  std::string path;  // e.g. "scenes[1].objects[0].dialog.text"
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation&, const Violation&) = default;
};

inline constexpr std::size_t kMaxTitleLength = 200;
inline constexpr std::size_t kMaxDescriptionLength = 2000;
inline constexpr std::size_t kMaxDialogLength = 500;
inline constexpr std::size_t kMaxNoteLength = 500;

std::vector<Violation> validate_story(const Story& story, ValidationMode mode);

std::string describe(const std::vector<Violation>& violations);

// Lengths are counted in Unicode code points.
std::size_t utf8_length(std::string_view s);
bool is_valid_utf8(std::string_view s);

std::size_t object_count(const Story& story);

}  // namespace microar
