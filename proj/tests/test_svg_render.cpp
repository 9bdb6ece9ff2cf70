#include <doctest.h>

#include <random>
#include <regex>

#include "microar/layout_engine.hpp"
#include "microar/svg_render.hpp"
#include "test_support.hpp"

using namespace microar;
using microar::testing::make_object;
using microar::testing::minimal_story;

namespace {

struct Rect {
  std::string id;
  double x, y, w, h;
};

std::vector<Rect> rects(const std::string& svg) {
  static const std::regex re(
      R"re(<rect class="footprint" data-object-id="([0-9a-f]+)" x="([-0-9.]+)" y="([-0-9.]+)" width="([-0-9.]+)" height="([-0-9.]+)"/>)re");
  std::vector<Rect> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.push_back({m[1], std::stod(m[2]), std::stod(m[3]), std::stod(m[4]), std::stod(m[5])});
  }
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("empty scene renders axes only") {
  auto s = minimal_story();
  s.scenes[0].objects.clear();
  const auto svg = render::render_scene_svg(s, 0);
  CHECK(count(svg, "class=\"axis-") == 2);
  CHECK(rects(svg).empty());
  CHECK(count(svg, "class=\"dialog\"") == 0);
  CHECK(svg.rfind("<?xml", 0) == 0);
}

TEST_CASE("a unit cube at the origin is a centered 1x1 rectangle") {
  const auto svg = render::render_scene_svg(minimal_story(), 0);
  const auto r = rects(svg);
  REQUIRE(r.size() == 1);
  CHECK(r[0].x == -0.5);
  CHECK(r[0].y == -0.5);
  CHECK(r[0].w == 1.0);
  CHECK(r[0].h == 1.0);
  CHECK(svg.find(">bee</text>") != std::string::npos);
}

TEST_CASE("rectangles agree with the layout engine footprints") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    auto s = microar::testing::random_story(rng, {1, 2, 8});
    const auto svg = render::render_scene_svg(s, 0);
    const auto& scene = s.scenes[0];
    const auto r = rects(svg);
    REQUIRE(r.size() == scene.objects.size());
    layout::Footprint all{1e300, 1e300, -1e300, -1e300};
    for (std::size_t j = 0; j < r.size(); ++j) {
      const auto f = layout::object_footprint(scene.objects[j], layout::kUnitCube);
      CHECK(r[j].id == scene.objects[j].object_id.hex());
      CHECK(std::abs(r[j].x - f.min_u) <= 5e-7);
      CHECK(std::abs(r[j].y - f.min_v) <= 5e-7);
      CHECK(std::abs(r[j].w - f.width()) <= 5e-7);
      CHECK(std::abs(r[j].h - f.depth()) <= 5e-7);
      all.min_u = std::min(all.min_u, r[j].x);
      all.min_v = std::min(all.min_v, r[j].y);
      all.max_u = std::max(all.max_u, r[j].x + r[j].w);
      all.max_v = std::max(all.max_v, r[j].y + r[j].h);
    }
    if (!scene.objects.empty()) {
      const auto f = layout::scene_footprint(scene, layout::unit_cube_bounds);
      CHECK(std::abs(all.min_u - f.min_u) <= 1e-6);
      CHECK(std::abs(all.max_v - f.max_v) <= 1e-6);
    }
  }
}

TEST_CASE("dialogs become escaped callouts") {
  auto s = minimal_story();
  s.scenes[0].objects[0].dialog = make_dialog("<Raawr & \"hi\">", {0.2, 0.3, 0.4});
  const auto svg = render::render_scene_svg(s, 0);
  CHECK(svg.find("&lt;Raawr &amp; &quot;hi&quot;&gt;") != std::string::npos);
  CHECK(svg.find("x=\"0.200000\" y=\"0.400000\" fill") != std::string::npos);
  CHECK(count(svg, "class=\"callout\"") == 1);
}

TEST_CASE("rendering is deterministic and rejects bad indices") {
  std::mt19937_64 rng(1);
  const auto s = microar::testing::random_story(rng, {3, 3, 5});
  for (int i = 0; i < 3; ++i) CHECK(render::render_scene_svg(s, i) == render::render_scene_svg(s, i));
  CHECK_THROWS_AS(render::render_scene_svg(s, 3), std::out_of_range);
  CHECK_THROWS_AS(render::render_scene_svg(s, -1), std::out_of_range);
}
