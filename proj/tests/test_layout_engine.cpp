#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "microar/layout_engine.hpp"
#include "microar/package_format.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace microar;
using namespace microar::layout;
using microar::testing::make_object;
using microar::testing::make_plane;
using microar::testing::random_transform;

namespace {

constexpr double kPi = std::numbers::pi;

AnchorPose origin_anchor(double yaw = 0.0, double w = 10.0, double d = 10.0) {
  return AnchorPose(make_plane(w, d), {0.0, 0.0}, yaw);
}

AnchorPose random_anchor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ext(0.5, 6.0);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> off(-5.0, 5.0);
  Plane p = make_plane(ext(rng), ext(rng));
  p.origin = {off(rng), off(rng) * 0.2, off(rng)};
  p.yaw = angle(rng);
  const Vec2 at{unit(rng) * p.extents.width(), unit(rng) * p.extents.depth()};
  return AnchorPose(p, at, angle(rng));
}

Scene scene_of(std::vector<PlacedObject> objects) {
  Scene s;
  s.scene_id = SceneId(1, 1);
  s.objects = std::move(objects);
  return s;
}

PlacedObject cube_at(const Vec3& p, double scale = 1.0, const Quat& q = {}) {
  static std::mt19937_64 rng(1);
  return make_object(rng, "cube", quantize_transform(p, q, scale));
}

BoundsLookup fixed_box(Aabb box) {
  return [box](const AssetRef&) { return box; };
}

CameraPose forward_camera(double fov = 60.0, double aspect = 1.0) { return CameraPose({}, {}, fov, aspect); }

}  // namespace

TEST_CASE("compose: identity anchor passes positions through") {
  const auto world = compose(origin_anchor(), quantize_transform({1, 0, 0}, {}, 1.0));
  CHECK(world.position.x == doctest::Approx(1.0));
  CHECK(world.position.y == doctest::Approx(0.0));
  CHECK(world.position.z == doctest::Approx(0.0));
}

TEST_CASE("compose: quarter-turn anchor maps +x to -z") {
  const auto anchor = origin_anchor(kPi / 2);
  const auto world = compose(anchor, quantize_transform({1, 0, 0}, {}, 1.0));
  const Vec3 expected = oracle::mul(oracle::matrix_yaw(kPi / 2), {1, 0, 0});
  CHECK(expected.z == doctest::Approx(-1.0));
  CHECK(world.position.x == doctest::Approx(expected.x).epsilon(1e-12));
  CHECK(world.position.z == doctest::Approx(expected.z).epsilon(1e-12));
  CHECK(std::abs(world.position.x) < 1e-12);
}

TEST_CASE("compose: identity transform yields the anchor pose") {
  std::mt19937_64 rng(4);
  const auto anchor = random_anchor(rng);
  const auto world = compose(anchor, Transform());
  const auto expected = oracle::world_point(anchor, {0, 0, 0});
  CHECK(world.position.x == doctest::Approx(expected.x));
  CHECK(world.position.y == doctest::Approx(expected.y));
  CHECK(world.position.z == doctest::Approx(expected.z));
  CHECK(world.scale == 1.0);
  // Rotation is the anchor heading about +y.
  const auto m = oracle::matrix_from_quat(world.rotation);
  const auto h = oracle::matrix_yaw(anchor.world_yaw());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(m[i][j] == doctest::Approx(h[i][j]));
}

TEST_CASE("compose agrees with the matrix oracle on random inputs") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto anchor = random_anchor(rng);
    const auto t = random_transform(rng);
    const auto world = compose(anchor, t);
    const auto expected = oracle::world_point(anchor, t.position());
    CHECK(world.position.x == doctest::Approx(expected.x).epsilon(1e-12));
    CHECK(world.position.z == doctest::Approx(expected.z).epsilon(1e-12));
    CHECK(world.scale == t.scale());
  }
}

TEST_CASE("relative_to inverts compose") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const auto anchor = random_anchor(rng);
    const auto t = random_transform(rng);
    REQUIRE(relative_to(anchor, compose(anchor, t)) == t);
  }
}

TEST_CASE("relative_to examples") {
  const auto anchor = origin_anchor(kPi / 2);
  const auto self = compose(anchor, Transform());
  CHECK(relative_to(anchor, self) == Transform());
  const auto local = relative_to(anchor, WorldPose{{0, 0, -1}, yaw_quat(kPi / 2), 1.0});
  CHECK(local == quantize_transform({1, 0, 0}, {}, 1.0));
}

TEST_CASE("anchor must lie within the plane") {
  CHECK_NOTHROW(AnchorPose(make_plane(2, 2), {1.0, -1.0}, 0.0));
  CHECK_THROWS_AS(AnchorPose(make_plane(2, 2), {1.01, 0.0}, 0.0), InvariantError);
}

TEST_CASE("scene_footprint examples") {
  CHECK(scene_footprint(scene_of({cube_at({})}), unit_cube_bounds) == Footprint{-0.5, -0.5, 0.5, 0.5});
  CHECK(scene_footprint(scene_of({cube_at({}, 2.0)}), unit_cube_bounds) == Footprint{-1, -1, 1, 1});
  CHECK(scene_footprint(scene_of({}), unit_cube_bounds) == Footprint{});

  const auto rotated = scene_of({cube_at({}, 1.0, yaw_quat(kPi / 4))});
  const auto f = scene_footprint(rotated, unit_cube_bounds);
  const auto o = oracle::corner_footprint(rotated, unit_cube_bounds);
  CHECK(o.max_u == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-9));
  CHECK(f.max_u == doctest::Approx(o.max_u).epsilon(1e-12));
  CHECK(f.min_v == doctest::Approx(o.min_v).epsilon(1e-12));
}

TEST_CASE("scene_footprint matches the corner-enumeration oracle") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 10);
  std::uniform_real_distribution<double> lo(-1.0, 0.0), hi(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Aabb box{{lo(rng), lo(rng) + 0.5, lo(rng)}, {hi(rng), hi(rng) + 0.5, hi(rng)}};
    std::vector<PlacedObject> objs;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) objs.push_back(make_object(rng, "k", random_transform(rng)));
    const auto scene = scene_of(objs);
    const auto f = scene_footprint(scene, fixed_box(box));
    CHECK(f == oracle::corner_footprint(scene, fixed_box(box)));
    const auto h = oracle::half_extent_footprint(scene, fixed_box(box));
    CHECK(std::abs(f.min_u - h.min_u) <= 1e-12);
    CHECK(std::abs(f.min_v - h.min_v) <= 1e-12);
    CHECK(std::abs(f.max_u - h.max_u) <= 1e-12);
    CHECK(std::abs(f.max_v - h.max_v) <= 1e-12);
  }
}

TEST_CASE("fits_on_plane examples") {
  const auto unit = scene_of({cube_at({})});
  auto r = fits_on_plane(unit, AnchorPose(make_plane(2, 2), {0, 0}, 0), unit_cube_bounds);
  CHECK(r.fits);
  CHECK(r.margin == doctest::Approx(0.5));

  const auto wide = fixed_box({{-1.5, 0, -0.5}, {1.5, 1, 0.5}});
  r = fits_on_plane(unit, AnchorPose(make_plane(2, 2), {0, 0}, 0), wide);
  CHECK_FALSE(r.fits);
  CHECK(r.margin == doctest::Approx(-0.5));

  r = fits_on_plane(unit, AnchorPose(make_plane(1, 1), {0, 0}, 0), unit_cube_bounds);
  CHECK(r.fits);
  CHECK(r.margin == 0.0);
}

TEST_CASE("fits_on_plane margin is tight") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> size(0.1, 1.0);
  std::uniform_real_distribution<double> extra(0.01, 0.5);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Aabb box{{-size(rng), 0, -size(rng)}, {size(rng), 1, size(rng)}};
    const auto scene = scene_of({cube_at({}, 1.0, yaw_quat(angle(rng)))});
    const auto fp = scene_footprint(scene, fixed_box(box));
    const Plane plane = make_plane(fp.width() * 1.5 + 0.5, fp.depth() * 1.5 + 0.5);
    const AnchorPose anchor(plane, {0, 0}, 0.0);
    const auto r = fits_on_plane(fp, anchor);
    REQUIRE(r.fits);
    // Nearest edge is the one attaining the margin; push toward it by margin + extra.
    const double push = r.margin + extra(rng);
    const double half_w = plane.extents.width() / 2, half_d = plane.extents.depth() / 2;
    const double clear[4] = {half_w - fp.max_u, fp.min_u + half_w, half_d - fp.max_v, fp.min_v + half_d};
    const int edge = static_cast<int>(std::min_element(clear, clear + 4) - clear);
    Vec2 moved{0, 0};
    if (edge == 0) moved.x = push;
    if (edge == 1) moved.x = -push;
    if (edge == 2) moved.y = push;
    if (edge == 3) moved.y = -push;
    if (std::abs(moved.x) > half_w || std::abs(moved.y) > half_d) continue;  // anchor would leave the plane
    CHECK_FALSE(fits_on_plane(fp, AnchorPose(plane, moved, 0.0)).fits);
  }
}

TEST_CASE("check_placement_hints") {
  PlacementHints floor{SurfaceClass::kFloor, std::nullopt, ""};
  CHECK(check_placement_hints(floor, make_plane(3, 3, SurfaceClass::kFloor)).empty());

  PlacementHints tub{SurfaceClass::kTubEdge, std::nullopt, "best placed on the bath tub"};
  const auto w = check_placement_hints(tub, make_plane(1, 1, SurfaceClass::kTable));
  REQUIRE(w.size() == 1);
  CHECK(w[0].code == "surface_mismatch");

  PlacementHints big{SurfaceClass::kAny, Extents(2, 2), ""};
  const auto small = check_placement_hints(big, make_plane(1, 1, SurfaceClass::kTable));
  REQUIRE(small.size() == 1);
  CHECK(small[0].code == "too_small");

  PlacementHints any{SurfaceClass::kAny, Extents(1, 3), ""};
  CHECK(check_placement_hints(any, make_plane(3, 1, SurfaceClass::kOutdoor)).empty());
}

TEST_CASE("apply_gesture") {
  SUBCASE("translate") {
    const auto t = apply_gesture(Transform(), gesture::Translate{1, 0});
    CHECK(t.position() == Vec3{1, 0, 0});
    CHECK(apply_gesture(Transform(), gesture::Translate{0, -2}).position() == Vec3{0, 0, -2});
  }
  SUBCASE("elevate") { CHECK(apply_gesture(Transform(), gesture::Elevate{0.25}).position() == Vec3{0, 0.25, 0}); }
  SUBCASE("scale inverse pair") {
    const auto start = quantize_transform({}, {}, 1.7);
    const auto back = apply_gesture(apply_gesture(start, gesture::Scale{10}), gesture::Scale{0.1});
    CHECK(std::abs(back.scale() - start.scale()) <= 1e-6);
  }
  SUBCASE("scale clamps") {
    CHECK(apply_gesture(Transform(), gesture::Scale{1000}).scale() == 100.0);
    CHECK(apply_gesture(Transform(), gesture::Scale{1e-5}).scale() == 0.01);
  }
  SUBCASE("rotate composes yaw about the plane normal") {
    auto t = apply_gesture(Transform(), gesture::RotateYaw{kPi / 6});
    t = apply_gesture(t, gesture::RotateYaw{kPi / 3});
    const auto m = oracle::matrix_from_quat(t.rotation());
    const auto expected = oracle::matrix_yaw(kPi / 2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(m[i][j] == doctest::Approx(expected[i][j]).epsilon(1e-8));
  }
  SUBCASE("rejects non-finite values") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(apply_gesture(Transform(), gesture::Translate{inf, 0}), InvariantError);
    CHECK_THROWS_AS(apply_gesture(Transform(), gesture::RotateYaw{std::nan("")}), InvariantError);
    CHECK_THROWS_AS(apply_gesture(Transform(), gesture::Scale{0}), InvariantError);
    CHECK_THROWS_AS(apply_gesture(Transform(), gesture::Elevate{-inf}), InvariantError);
  }
}

TEST_CASE("navigation_hint examples") {
  const auto cam = forward_camera(60.0);
  CHECK(navigation_hint(cam, {0, 0, -2}).in_view);
  CHECK_FALSE(navigation_hint(cam, {0, 0, -2}).arrow.has_value());

  const auto right = navigation_hint(cam, {2, 0, 0});
  CHECK_FALSE(right.in_view);
  REQUIRE(right.arrow);
  CHECK(right.arrow->x == doctest::Approx(1.0));
  CHECK(right.arrow->y == doctest::Approx(0.0));

  const auto behind = navigation_hint(cam, {0, 0, 3});
  CHECK_FALSE(behind.in_view);
  REQUIRE(behind.arrow);
  CHECK(*behind.arrow == Vec2{1.0, 0.0});

  const auto up = navigation_hint(cam, {0, 5, -1});
  CHECK_FALSE(up.in_view);
  CHECK(up.arrow->y == doctest::Approx(1.0));
}

TEST_CASE("navigation_hint frustum boundary is inclusive") {
  // 90 degree fov: the frustum edge is the 45 degree line. (1, 0, -1) sits
  // exactly on it once rounding in tan(pi/4) is accounted for.
  const auto cam = forward_camera(90.0);
  const double edge = std::tan(90.0 * kPi / 360.0);
  CHECK(navigation_hint(cam, {edge, 0, -1}).in_view);
  CHECK_FALSE(navigation_hint(cam, {edge * 1.001, 0, -1}).in_view);
}

TEST_CASE("navigation arrows are unit length and scaling about the centroid keeps visibility") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> fov(10.0, 120.0), aspect(0.4, 2.5), f(0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    const CameraPose cam({g(rng), g(rng), g(rng)}, {g(rng), g(rng), g(rng), g(rng)}, fov(rng), aspect(rng));
    std::mt19937_64 srng(i);
    std::vector<PlacedObject> objs;
    for (int k = 0; k < 4; ++k) objs.push_back(make_object(srng, "k", random_transform(srng)));
    const auto anchor = origin_anchor();
    auto scene = scene_of(objs);
    const auto c = scene_centroid(scene, anchor);
    const auto hint = navigation_hint(cam, c);
    if (hint.arrow) CHECK(std::hypot(hint.arrow->x, hint.arrow->y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hint.in_view != hint.arrow.has_value());

    // Scale every object's position about the (anchor-local) centroid.
    const double factor = f(rng);
    const auto local_c = relative_to(anchor, {c, {}, 1.0}).position();
    for (auto& o : scene.objects) {
      const auto p = o.transform.position();
      o.transform = quantize_transform({local_c.x + (p.x - local_c.x) * factor, local_c.y + (p.y - local_c.y) * factor,
                                        local_c.z + (p.z - local_c.z) * factor},
                                       o.transform.rotation(), o.transform.scale() * factor);
    }
    const auto c2 = scene_centroid(scene, anchor);
    CHECK(std::abs(c2.x - c.x) <= 1e-5);
    CHECK(std::abs(c2.y - c.y) <= 1e-5);
    CHECK(std::abs(c2.z - c.z) <= 1e-5);
    CHECK(navigation_hint(cam, c2).in_view == hint.in_view);
  }
}

TEST_CASE("clutter_ratio examples") {
  const auto cam = forward_camera(60.0);
  const auto anchor = origin_anchor();
  CHECK(clutter_ratio(cam, scene_of({}), anchor, unit_cube_bounds) == 0.0);

  // Sphere of radius 1.5 at distance 2 subtends asin(0.75) ~ 48.6 deg, wider
  // than the frustum corner ray at atan(sqrt(2) * tan 30deg) ~ 39.2 deg.
  const Aabb big{{-1.5 / std::sqrt(3.0), -1.5 / std::sqrt(3.0), -1.5 / std::sqrt(3.0)},
                 {1.5 / std::sqrt(3.0), 1.5 / std::sqrt(3.0), 1.5 / std::sqrt(3.0)}};
  CHECK(std::asin(0.75) > std::atan(std::sqrt(2.0) * std::tan(kPi / 6)));
  CHECK(clutter_ratio(cam, scene_of({cube_at({0, 0, -2})}), anchor, fixed_box(big)) == 1.0);

  // Camera inside the sphere.
  CHECK(clutter_ratio(cam, scene_of({cube_at({0, 0, 0.2})}), anchor, fixed_box(big)) == 1.0);

  // Entirely behind the camera.
  CHECK(clutter_ratio(cam, scene_of({cube_at({0, 0, 5})}), anchor, unit_cube_bounds) == 0.0);

  // Small distant object against the raycast oracle.
  const auto small = scene_of({cube_at({0.3, 0.1, -8}, 0.5)});
  const double r = clutter_ratio(cam, small, anchor, unit_cube_bounds);
  CHECK(r > 0.0);
  CHECK(std::abs(r - oracle::raycast_clutter(cam, small, anchor, unit_cube_bounds)) <= 1.0 / 4096);
}

TEST_CASE("clutter_ratio matches the raycast oracle and grows monotonically") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> along(-6.0, 1.0), side(-2.0, 2.0), sc(0.05, 1.5);
  for (int i = 0; i < 30; ++i) {
    const CameraPose cam({0, 1.5, 2}, {1, g(rng) * 0.2, g(rng) * 0.2, 0}, 60.0, 0.75);
    const auto anchor = origin_anchor(g(rng));
    Scene scene = scene_of({});
    double prev = 0.0;
    for (int k = 0; k < 6; ++k) {
      scene.objects.push_back(
          make_object(rng, "k", quantize_transform({side(rng), side(rng) * 0.5, along(rng)}, {}, sc(rng))));
      const double r = clutter_ratio(cam, scene, anchor, unit_cube_bounds);
      CHECK(r >= prev);
      CHECK(std::abs(r - oracle::raycast_clutter(cam, scene, anchor, unit_cube_bounds)) <= 1.0 / 4096);
      prev = r;
    }
  }
}

TEST_CASE("crowded warning threshold") {
  CHECK_FALSE(clutter_warning(0.59).has_value());
  REQUIRE(clutter_warning(0.6).has_value());
  CHECK(clutter_warning(0.6)->code == "crowded");
}

TEST_CASE("drafts persist to disk and reload") {
  microar::testing::TempDir dir;
  const auto path = dir.path() / "session.mar";
  auto s = microar::testing::minimal_story();
  s.scenes[0].objects.clear();
  s.metadata.title.clear();
  save_draft(s, path);
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(validate_story(s, ValidationMode::kPublish).empty());

  // A separate load (as after a restart) reads the file back.
  const auto loaded = load_draft(path);
  CHECK(loaded == s);

  std::ofstream(path, std::ios::binary | std::ios::trunc) << "garbage";
  CHECK_THROWS_AS(load_draft(path), DecodeError);
}
