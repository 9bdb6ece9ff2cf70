#include "microar/svg_render.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace microar::render {

namespace {

constexpr double kMargin = 0.25;
constexpr double kMinHalfExtent = 1.0;  // axes stay visible for tiny scenes
constexpr double kFontSize = 0.06;

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_scene_svg(const Story& story, int scene_index, const layout::BoundsLookup& bounds) {
  if (scene_index < 0 || static_cast<std::size_t>(scene_index) >= story.scenes.size())
    throw std::out_of_range("scene index " + std::to_string(scene_index) + " is out of range (story has " +
                            std::to_string(story.scenes.size()) + " scenes)");
  const Scene& scene = story.scenes[static_cast<std::size_t>(scene_index)];

  double lo_u = -kMinHalfExtent, lo_v = -kMinHalfExtent, hi_u = kMinHalfExtent, hi_v = kMinHalfExtent;
  const auto extend = [&](double u, double v) {
    lo_u = std::min(lo_u, u);
    hi_u = std::max(hi_u, u);
    lo_v = std::min(lo_v, v);
    hi_v = std::max(hi_v, v);
  };
  for (const auto& o : scene.objects) {
    const auto f = layout::object_footprint(o, bounds(o.asset));
    extend(f.min_u, f.min_v);
    extend(f.max_u, f.max_v);
    if (o.dialog) {
      const auto p = o.transform.position();
      extend(p.x + o.dialog->offset.x, p.z + o.dialog->offset.z);
    }
  }
  lo_u -= kMargin;
  lo_v -= kMargin;
  hi_u += kMargin;
  hi_v += kMargin;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(lo_u) + " " + num(lo_v) + " " +
         num(hi_u - lo_u) + " " + num(hi_v - lo_v) + "\" width=\"" + num((hi_u - lo_u) * 200) + "\" height=\"" +
         num((hi_v - lo_v) * 200) + "\">\n";
  out += "<title>" + escape(story.metadata.title) + " - scene " + std::to_string(scene_index) + "</title>\n";

  out += "<g id=\"axes\" stroke=\"#888888\" stroke-width=\"0.005\">\n";
  out += "<line class=\"axis-x\" x1=\"" + num(lo_u) + "\" y1=\"0.000000\" x2=\"" + num(hi_u) + "\" y2=\"0.000000\"/>\n";
  out += "<line class=\"axis-z\" x1=\"0.000000\" y1=\"" + num(lo_v) + "\" x2=\"0.000000\" y2=\"" + num(hi_v) + "\"/>\n";
  out += "</g>\n";

  out += "<g id=\"objects\" fill=\"#4a90d9\" fill-opacity=\"0.35\" stroke=\"#1f4e79\" stroke-width=\"0.01\">\n";
  for (const auto& o : scene.objects) {
    const auto f = layout::object_footprint(o, bounds(o.asset));
    out += "<rect class=\"footprint\" data-object-id=\"" + o.object_id.hex() + "\" x=\"" + num(f.min_u) + "\" y=\"" +
           num(f.min_v) + "\" width=\"" + num(f.width()) + "\" height=\"" + num(f.depth()) + "\"/>\n";
    const auto p = o.transform.position();
    out += "<text class=\"label\" x=\"" + num(p.x) + "\" y=\"" + num(p.z) + "\" font-size=\"" + num(kFontSize) +
           "\" text-anchor=\"middle\" fill=\"#000000\" stroke=\"none\">" + escape(o.asset.display_name) + "</text>\n";
  }
  out += "</g>\n";

  out += "<g id=\"dialogs\" font-size=\"" + num(kFontSize) + "\">\n";
  for (const auto& o : scene.objects) {
    if (!o.dialog) continue;
    const auto p = o.transform.position();
    const double x = p.x + o.dialog->offset.x;
    const double y = p.z + o.dialog->offset.z;
    out += "<line class=\"callout\" x1=\"" + num(p.x) + "\" y1=\"" + num(p.z) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(y) + "\" stroke=\"#d9534f\" stroke-width=\"0.005\"/>\n";
    out += "<text class=\"dialog\" data-object-id=\"" + o.object_id.hex() + "\" x=\"" + num(x) + "\" y=\"" + num(y) +
           "\" fill=\"#d9534f\">" + escape(o.dialog->text) + "</text>\n";
  }
  out += "</g>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace microar::render
