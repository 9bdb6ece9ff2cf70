#include "microar/layout_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>
#include <system_error>

#include "microar/package_format.hpp"

namespace microar::layout {

namespace {

Vec3 add(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 mul(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double length(const Vec3& a) { return std::sqrt(dot(a, a)); }

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Aabb unit_cube_bounds(const AssetRef&) { return kUnitCube; }

Quat multiply(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

Quat yaw_quat(double radians) { return {std::cos(radians / 2.0), 0.0, std::sin(radians / 2.0), 0.0}; }

Vec3 rotate(const Quat& q, const Vec3& v) {
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = mul(cross(u, v), 2.0);
  return add(add(v, mul(t, q.w)), cross(u, t));
}

Vec3 rotate_yaw(double radians, const Vec3& v) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {v.x * c + v.z * s, v.y, -v.x * s + v.z * c};
}

AnchorPose::AnchorPose(Plane plane, Vec2 position, double yaw)
    : plane_(std::move(plane)), position_(position), yaw_(yaw) {
  if (!finite(position.x) || !finite(position.y) || !finite(yaw)) throw InvariantError("anchor must be finite");
  if (std::abs(position.x) > plane_.extents.width() / 2.0 || std::abs(position.y) > plane_.extents.depth() / 2.0) {
    throw InvariantError("anchor must lie within the plane extents");
  }
}

Vec3 AnchorPose::world_position() const {
  return add(plane_.origin, rotate_yaw(plane_.yaw, {position_.x, 0.0, position_.y}));
}

WorldPose compose(const AnchorPose& anchor, const Transform& local) {
  const double heading = anchor.world_yaw();
  return {add(anchor.world_position(), rotate_yaw(heading, local.position())),
          multiply(yaw_quat(heading), local.rotation()), local.scale()};
}

Transform relative_to(const AnchorPose& anchor, const WorldPose& world) {
  const double heading = anchor.world_yaw();
  const Vec3 local = rotate_yaw(-heading, sub(world.position, anchor.world_position()));
  const Quat rot = multiply(conjugate(yaw_quat(heading)), world.rotation);
  return quantize_transform(local, rot, world.scale);
}

Footprint object_footprint(const PlacedObject& object, const Aabb& bounds) {
  // Every transformed corner, projected. Only the x and z rows of the
  // rotation matrix matter for the plane; the extremes are exact maxima of
  // the eight projections, so no rounding enters beyond the projection itself.
  const Quat q = object.transform.rotation();
  const Vec3 row_u{1 - 2 * (q.y * q.y + q.z * q.z), 2 * (q.x * q.y - q.w * q.z), 2 * (q.x * q.z + q.w * q.y)};
  const Vec3 row_v{2 * (q.x * q.z - q.w * q.y), 2 * (q.y * q.z + q.w * q.x), 1 - 2 * (q.x * q.x + q.y * q.y)};
  const double s = object.transform.scale();
  const Vec3 p = object.transform.position();
  Footprint f{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const double cx : {bounds.min.x, bounds.max.x}) {
    for (const double cy : {bounds.min.y, bounds.max.y}) {
      for (const double cz : {bounds.min.z, bounds.max.z}) {
        const Vec3 corner{cx * s, cy * s, cz * s};
        const double u = p.x + dot(row_u, corner);
        const double v = p.z + dot(row_v, corner);
        f.min_u = std::min(f.min_u, u);
        f.max_u = std::max(f.max_u, u);
        f.min_v = std::min(f.min_v, v);
        f.max_v = std::max(f.max_v, v);
      }
    }
  }
  return f;
}

Footprint scene_footprint(const Scene& scene, const BoundsLookup& bounds) {
  if (scene.objects.empty()) return {};
  Footprint out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& obj : scene.objects) {
    const auto f = object_footprint(obj, bounds(obj.asset));
    out.min_u = std::min(out.min_u, f.min_u);
    out.min_v = std::min(out.min_v, f.min_v);
    out.max_u = std::max(out.max_u, f.max_u);
    out.max_v = std::max(out.max_v, f.max_v);
  }
  return out;
}

FitResult fits_on_plane(const Footprint& footprint, const AnchorPose& anchor) {
  const double half_w = anchor.plane().extents.width() / 2.0;
  const double half_d = anchor.plane().extents.depth() / 2.0;
  const double c = std::cos(anchor.yaw());
  const double s = std::sin(anchor.yaw());
  double margin = std::numeric_limits<double>::infinity();
  for (double cu : {footprint.min_u, footprint.max_u}) {
    for (double cv : {footprint.min_v, footprint.max_v}) {
      const double pu = anchor.position().x + cu * c + cv * s;
      const double pv = anchor.position().y - cu * s + cv * c;
      margin = std::min({margin, half_w - pu, pu + half_w, half_d - pv, pv + half_d});
    }
  }
  return {margin >= 0.0, margin};
}

FitResult fits_on_plane(const Scene& scene, const AnchorPose& anchor, const BoundsLookup& bounds) {
  return fits_on_plane(scene_footprint(scene, bounds), anchor);
}

std::vector<Warning> check_placement_hints(const PlacementHints& hints, const Plane& plane) {
  std::vector<Warning> out;
  if (hints.surface_class != SurfaceClass::kAny && hints.surface_class != plane.surface_class) {
    out.push_back({"surface_mismatch", "story prefers a " + std::string(to_string(hints.surface_class)) +
                                           " surface but the plane is " +
                                           std::string(to_string(plane.surface_class))});
  }
  if (hints.min_extents) {
    const double w = plane.extents.width();
    const double d = plane.extents.depth();
    const double mw = hints.min_extents->width();
    const double md = hints.min_extents->depth();
    // The viewer may turn the scene, so either orientation counts.
    if (!((w >= mw && d >= md) || (w >= md && d >= mw))) {
      std::ostringstream os;
      os << "plane " << w << " x " << d << " m is smaller than the suggested " << mw << " x " << md << " m";
      out.push_back({"too_small", os.str()});
    }
  }
  return out;
}

Transform apply_gesture(const Transform& t, const Gesture& g) {
  Vec3 pos = t.position();
  Quat rot = t.rotation();
  double scale = t.scale();
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, gesture::Translate>) {
          if (!finite(op.du) || !finite(op.dv)) throw InvariantError("translate gesture must be finite");
          pos.x += op.du;
          pos.z += op.dv;
        } else if constexpr (std::is_same_v<T, gesture::RotateYaw>) {
          if (!finite(op.radians)) throw InvariantError("rotate gesture must be finite");
          rot = multiply(yaw_quat(op.radians), rot);
        } else if constexpr (std::is_same_v<T, gesture::Scale>) {
          if (!finite(op.factor) || op.factor <= 0.0) throw InvariantError("scale factor must be finite and > 0");
          scale = std::clamp(scale * op.factor, Transform::kMinScale, Transform::kMaxScale);
        } else {
          if (!finite(op.dy)) throw InvariantError("elevate gesture must be finite");
          pos.y += op.dy;
        }
      },
      g);
  return quantize_transform(pos, rot, scale);
}

Vec3 scene_centroid(const Scene& scene, const AnchorPose& anchor) {
  if (scene.objects.empty()) return anchor.world_position();
  Vec3 sum;
  for (const auto& obj : scene.objects) sum = add(sum, compose(anchor, obj.transform).position);
  return mul(sum, 1.0 / static_cast<double>(scene.objects.size()));
}

NavigationHint navigation_hint(const CameraPose& camera, const Vec3& centroid) {
  const Vec3 d = rotate(conjugate(camera.orientation()), sub(centroid, camera.position()));
  const double tan_v = std::tan(camera.vertical_fov_deg() * std::numbers::pi / 360.0);
  const double tan_h = tan_v * camera.aspect();
  if (d.z < 0.0) {
    const double depth = -d.z;
    if (std::abs(d.y) <= tan_v * depth && std::abs(d.x) <= tan_h * depth) return {true, std::nullopt};
  }
  const double planar = std::hypot(d.x, d.y);
  if (planar <= 1e-12 * length(d)) return {false, Vec2{1.0, 0.0}};
  return {false, Vec2{d.x / planar, d.y / planar}};
}

Vec3 sample_ray(const CameraPose& camera, int col, int row) {
  const double tan_v = std::tan(camera.vertical_fov_deg() * std::numbers::pi / 360.0);
  const double ndc_x = (col + 0.5) / kClutterGrid * 2.0 - 1.0;
  const double ndc_y = 1.0 - (row + 0.5) / kClutterGrid * 2.0;
  const Vec3 dir = rotate(camera.orientation(), {ndc_x * tan_v * camera.aspect(), ndc_y * tan_v, -1.0});
  return mul(dir, 1.0 / length(dir));
}

BoundingSphere object_sphere(const PlacedObject& object, const AnchorPose& anchor, const Aabb& bounds) {
  const double s = object.transform.scale();
  const Vec3 center_local = mul(mul(add(bounds.min, bounds.max), 0.5), s);
  const Vec3 in_scene = add(object.transform.position(), rotate(object.transform.rotation(), center_local));
  const Vec3 world = add(anchor.world_position(), rotate_yaw(anchor.world_yaw(), in_scene));
  return {world, length(sub(bounds.max, bounds.min)) * 0.5 * s};
}

double clutter_ratio(const CameraPose& camera, const Scene& scene, const AnchorPose& anchor,
                     const BoundsLookup& bounds) {
  // Each sphere subtends a cone from the camera; a sample is covered when its
  // ray direction falls inside any cone.
  struct Cone {
    Vec3 axis;
    double cos_half_angle;
  };
  std::vector<Cone> cones;
  for (const auto& obj : scene.objects) {
    const auto sphere = object_sphere(obj, anchor, bounds(obj.asset));
    const Vec3 to_center = sub(sphere.center, camera.position());
    const double dist = length(to_center);
    if (dist <= sphere.radius) return 1.0;  // camera inside: every ray hits
    cones.push_back({mul(to_center, 1.0 / dist),
                     std::sqrt(dist * dist - sphere.radius * sphere.radius) / dist});
  }
  if (cones.empty()) return 0.0;

  int covered = 0;
  for (int row = 0; row < kClutterGrid; ++row) {
    for (int col = 0; col < kClutterGrid; ++col) {
      const Vec3 ray = sample_ray(camera, col, row);
      for (const auto& cone : cones) {
        if (dot(ray, cone.axis) >= cone.cos_half_angle) {
          ++covered;
          break;
        }
      }
    }
  }
  return static_cast<double>(covered) / (kClutterGrid * kClutterGrid);
}

std::optional<Warning> clutter_warning(double ratio) {
  if (ratio < kCrowdedThreshold) return std::nullopt;
  std::ostringstream os;
  os << "scene covers " << static_cast<int>(std::lround(ratio * 100)) << "% of the viewport";
  return Warning{"crowded", os.str()};
}

void save_draft(const Story& story, const std::filesystem::path& session_path) {
  const auto bytes = encode(story, PackageKind::kDraft);
  auto tmp = session_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, session_path);
}

Story load_draft(const std::filesystem::path& session_path) {
  std::ifstream in(session_path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read " + session_path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_package(bytes).story;
}

}  // namespace microar::layout
