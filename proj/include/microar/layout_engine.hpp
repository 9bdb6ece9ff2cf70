#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "microar/core_model.hpp"

namespace microar::layout {

// Plane-local frame: +x right, +y along the plane normal (world up), +z
// forward; right-handed. Yaw is a rotation about +y that carries +x toward -z.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Object-local axis-aligned box, meters.
struct Aabb {
  Vec3 min{-0.5, -0.5, -0.5};
  Vec3 max{0.5, 0.5, 0.5};

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

inline constexpr Aabb kUnitCube{};

// Maps an asset to its local bounds. Callers that have no catalog use unit_cube_bounds.
using BoundsLookup = std::function<Aabb(const AssetRef&)>;
Aabb unit_cube_bounds(const AssetRef&);

class AnchorPose {
 public:
  // Throws InvariantError when (u, v) lies outside the plane extents.
  AnchorPose(Plane plane, Vec2 position, double yaw);

  const Plane& plane() const { return plane_; }
  const Vec2& position() const { return position_; }
  double yaw() const { return yaw_; }

  Vec3 world_position() const;
  // Heading about world up: plane yaw plus anchor yaw.
  double world_yaw() const { return plane_.yaw + yaw_; }

 private:
  Plane plane_;
  Vec2 position_;
  double yaw_;
};

// Unquantized world pose produced by compose().
struct WorldPose {
  Vec3 position;
  Quat rotation;
  double scale = 1.0;
};

struct Footprint {
  double min_u = 0.0;
  double min_v = 0.0;
  double max_u = 0.0;
  double max_v = 0.0;

  double width() const { return max_u - min_u; }
  double depth() const { return max_v - min_v; }
  friend bool operator==(const Footprint&, const Footprint&) = default;
};

struct FitResult {
  bool fits = false;
  double margin = 0.0;  // signed minimum clearance; negative when overhanging
};

struct Warning {
  std::string code;  // "surface_mismatch" | "too_small" | "crowded"
  std::string message;

  friend bool operator==(const Warning&, const Warning&) = default;
};

struct NavigationHint {
  bool in_view = false;
  std::optional<Vec2> arrow;  // screen space, x right, y up; present iff !in_view
};

namespace gesture {
struct Translate {
  double du = 0.0;
  double dv = 0.0;
};
struct RotateYaw {
  double radians = 0.0;
};
struct Scale {
  double factor = 1.0;
};
struct Elevate {
  double dy = 0.0;
};
}  // namespace gesture

using Gesture = std::variant<gesture::Translate, gesture::RotateYaw, gesture::Scale, gesture::Elevate>;

// Quaternion helpers shared by the engine and its clients.
Quat multiply(const Quat& a, const Quat& b);
Quat conjugate(const Quat& q);
Quat yaw_quat(double radians);
Vec3 rotate(const Quat& q, const Vec3& v);
Vec3 rotate_yaw(double radians, const Vec3& v);

WorldPose compose(const AnchorPose& anchor, const Transform& local);
Transform relative_to(const AnchorPose& anchor, const WorldPose& world);

Footprint scene_footprint(const Scene& scene, const BoundsLookup& bounds);
// Plane-projected box of a single placed object (anchor-local).
Footprint object_footprint(const PlacedObject& object, const Aabb& bounds);

FitResult fits_on_plane(const Scene& scene, const AnchorPose& anchor, const BoundsLookup& bounds);
// Fit test for a precomputed anchor-local footprint.
FitResult fits_on_plane(const Footprint& footprint, const AnchorPose& anchor);

std::vector<Warning> check_placement_hints(const PlacementHints& hints, const Plane& plane);

// Throws InvariantError on non-finite gesture values or a non-positive scale factor.
Transform apply_gesture(const Transform& t, const Gesture& g);

// Arithmetic mean of object world positions; the anchor position for an empty scene.
Vec3 scene_centroid(const Scene& scene, const AnchorPose& anchor);

NavigationHint navigation_hint(const CameraPose& camera, const Vec3& scene_centroid);

inline constexpr int kClutterGrid = 64;
inline constexpr double kCrowdedThreshold = 0.6;

// Direction, in world space, of the ray through the center of sample (col, row)
// of the kClutterGrid x kClutterGrid viewport grid; row 0 is the top row.
Vec3 sample_ray(const CameraPose& camera, int col, int row);

struct BoundingSphere {
  Vec3 center;
  double radius = 0.0;
};

// Circumscribed sphere of the object's scaled box, in world space.
BoundingSphere object_sphere(const PlacedObject& object, const AnchorPose& anchor, const Aabb& bounds);

double clutter_ratio(const CameraPose& camera, const Scene& scene, const AnchorPose& anchor,
                     const BoundsLookup& bounds);

std::optional<Warning> clutter_warning(double ratio);

// Drafts are ordinary packages carrying the draft marker; writes are atomic
// (temp file + rename). load_draft surfaces package DecodeErrors.
void save_draft(const Story& story, const std::filesystem::path& session_path);
Story load_draft(const std::filesystem::path& session_path);

}  // namespace microar::layout
