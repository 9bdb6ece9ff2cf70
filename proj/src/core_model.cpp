#include "microar/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace microar {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

std::int64_t snap(double value, std::int64_t units) {
  return static_cast<std::int64_t>(std::nearbyint(value * static_cast<double>(units)));
}

double norm_of(const std::array<std::int64_t, 4>& q) {
  double s = 0.0;
  for (auto c : q) {
    const double d = static_cast<double>(c) / Transform::kRotationUnits;
    s += d * d;
  }
  return std::sqrt(s);
}

void canonicalize_sign(std::array<std::int64_t, 4>& q) {
  for (auto c : q) {
    if (c == 0) continue;
    if (c < 0) {
      for (auto& v : q) v = -v;
    }
    return;
  }
}

std::string trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> parse_hex128(std::string_view hex) {
  if (hex.size() != 32) throw InvariantError("id must be 32 lowercase hex characters");
  std::uint64_t parts[2] = {0, 0};
  for (std::size_t i = 0; i < 32; ++i) {
    const int v = hex_value(hex[i]);
    if (v < 0) throw InvariantError("id must be 32 lowercase hex characters");
    parts[i / 16] = (parts[i / 16] << 4) | static_cast<std::uint64_t>(v);
  }
  return {parts[0], parts[1]};
}

std::string format_hex128(std::uint64_t hi, std::uint64_t lo) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = kDigits[(hi >> (4 * i)) & 0xf];
    out[31 - i] = kDigits[(lo >> (4 * i)) & 0xf];
  }
  return out;
}

bool is_story_id_hex(std::string_view hex) {
  return hex.size() == 64 && std::all_of(hex.begin(), hex.end(), [](char c) { return hex_value(c) >= 0; });
}

StoryId StoryId::parse(std::string_view hex) {
  if (!is_story_id_hex(hex)) throw InvariantError("story id must be 64 lowercase hex characters");
  return StoryId(std::string(hex));
}

StoryId StoryId::from_digest(const Digest& digest) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(64);
  for (auto b : digest) {
    hex.push_back(kDigits[b >> 4]);
    hex.push_back(kDigits[b & 0xf]);
  }
  return StoryId(std::move(hex));
}

std::string_view to_string(SurfaceClass c) {
  switch (c) {
    case SurfaceClass::kFloor: return "floor";
    case SurfaceClass::kTable: return "table";
    case SurfaceClass::kCounter: return "counter";
    case SurfaceClass::kTubEdge: return "tub_edge";
    case SurfaceClass::kOutdoor: return "outdoor";
    case SurfaceClass::kAny: return "any";
  }
  return "any";
}

std::optional<SurfaceClass> parse_surface_class(std::string_view s) {
  for (auto c : {SurfaceClass::kFloor, SurfaceClass::kTable, SurfaceClass::kCounter, SurfaceClass::kTubEdge,
                 SurfaceClass::kOutdoor, SurfaceClass::kAny}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Extents::Extents(double width, double depth) : width_(width), depth_(depth) {
  if (!(std::isfinite(width) && std::isfinite(depth) && width > 0.0 && depth > 0.0)) {
    throw InvariantError("extents must be finite and strictly positive");
  }
}

Transform::Transform() = default;

Transform Transform::from_scaled(const std::array<std::int64_t, 3>& position_um,
                                 const std::array<std::int64_t, 4>& rotation_nano, std::int64_t scale_ppm) {
  if (std::abs(norm_of(rotation_nano) - 1.0) > kNormTolerance) {
    throw InvariantError("rotation must be a unit quaternion");
  }
  if (scale_ppm < snap(kMinScale, kScaleUnits) || scale_ppm > snap(kMaxScale, kScaleUnits)) {
    throw InvariantError("scale must lie in [0.01, 100]");
  }
  auto canonical = rotation_nano;
  canonicalize_sign(canonical);
  if (canonical != rotation_nano) throw InvariantError("rotation must have its first non-zero component positive");
  Transform t;
  t.position_um_ = position_um;
  t.rotation_nano_ = rotation_nano;
  t.scale_ppm_ = scale_ppm;
  return t;
}

Vec3 Transform::position() const {
  constexpr auto u = static_cast<double>(kPositionUnitsPerMeter);
  return {static_cast<double>(position_um_[0]) / u, static_cast<double>(position_um_[1]) / u,
          static_cast<double>(position_um_[2]) / u};
}

Quat Transform::rotation() const {
  constexpr auto u = static_cast<double>(kRotationUnits);
  return {static_cast<double>(rotation_nano_[0]) / u, static_cast<double>(rotation_nano_[1]) / u,
          static_cast<double>(rotation_nano_[2]) / u, static_cast<double>(rotation_nano_[3]) / u};
}

double Transform::scale() const { return static_cast<double>(scale_ppm_) / kScaleUnits; }

Transform quantize_transform(const Vec3& position, const Quat& rotation, double scale) {
  if (!finite(position) || !std::isfinite(rotation.w) || !std::isfinite(rotation.x) || !std::isfinite(rotation.y) ||
      !std::isfinite(rotation.z) || !std::isfinite(scale)) {
    throw InvariantError("transform components must be finite");
  }
  if (scale <= 0.0) throw InvariantError("scale must be positive");
  const double n = std::sqrt(rotation.w * rotation.w + rotation.x * rotation.x + rotation.y * rotation.y +
                             rotation.z * rotation.z);
  if (!(n > 0.0)) throw InvariantError("rotation quaternion must be non-zero");

  Transform t;
  t.position_um_ = {snap(position.x, Transform::kPositionUnitsPerMeter),
                    snap(position.y, Transform::kPositionUnitsPerMeter),
                    snap(position.z, Transform::kPositionUnitsPerMeter)};

  // Values already on the grid and on the unit sphere are kept as-is, which
  // makes quantization idempotent; everything else is renormalized first.
  constexpr auto units = Transform::kRotationUnits;
  std::array<std::int64_t, 4> q{snap(rotation.w, units), snap(rotation.x, units), snap(rotation.y, units),
                                snap(rotation.z, units)};
  if (std::abs(norm_of(q) - 1.0) > Transform::kNormTolerance) {
    q = {snap(rotation.w / n, units), snap(rotation.x / n, units), snap(rotation.y / n, units),
         snap(rotation.z / n, units)};
    // Rounding four components can leave the norm a hair outside tolerance;
    // nudge the dominant component back onto the sphere.
    for (int guard = 0; guard < 4 && std::abs(norm_of(q) - 1.0) > Transform::kNormTolerance; ++guard) {
      auto& big = *std::max_element(q.begin(), q.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
      const bool too_long = norm_of(q) > 1.0;
      big += ((big > 0) == too_long) ? -1 : 1;
    }
  }
  canonicalize_sign(q);
  t.rotation_nano_ = q;

  const double clamped = std::clamp(scale, Transform::kMinScale, Transform::kMaxScale);
  t.scale_ppm_ = snap(clamped, Transform::kScaleUnits);
  return t;
}

DialogBalloon make_dialog(std::string text, const Vec3& offset) {
  if (!finite(offset)) throw InvariantError("dialog offset must be finite");
  constexpr auto u = Transform::kPositionUnitsPerMeter;
  constexpr auto d = static_cast<double>(u);
  return DialogBalloon{std::move(text),
                       {static_cast<double>(snap(offset.x, u)) / d, static_cast<double>(snap(offset.y, u)) / d,
                        static_cast<double>(snap(offset.z, u)) / d}};
}

CameraPose::CameraPose(const Vec3& position, const Quat& orientation, double vertical_fov_deg, double aspect)
    : position_(position), vertical_fov_deg_(vertical_fov_deg), aspect_(aspect) {
  if (!finite(position)) throw InvariantError("camera position must be finite");
  if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0)) throw InvariantError("vertical fov must be in (0, 180)");
  if (!(aspect > 0.0 && std::isfinite(aspect))) throw InvariantError("aspect must be positive");
  const double n = std::sqrt(orientation.w * orientation.w + orientation.x * orientation.x +
                             orientation.y * orientation.y + orientation.z * orientation.z);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvariantError("camera orientation must be a non-zero quaternion");
  orientation_ = {orientation.w / n, orientation.x / n, orientation.y / n, orientation.z / n};
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10ffff ||
        (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; }));
}

std::size_t object_count(const Story& story) {
  std::size_t n = 0;
  for (const auto& scene : story.scenes) n += scene.objects.size();
  return n;
}

namespace {

class Checker {
 public:
  explicit Checker(std::vector<Violation>& out) : out_(out) {}

  void fail(std::string path, std::string rule) { out_.push_back({std::move(path), std::move(rule)}); }

  void text(const std::string& path, const std::string& value, std::size_t max_len, bool required) {
    if (!is_valid_utf8(value)) {
      fail(path, "must be valid UTF-8");
      return;
    }
    if (required && trim(value).empty()) fail(path, "must be non-empty");
    if (utf8_length(value) > max_len) fail(path, "must be at most " + std::to_string(max_len) + " characters");
  }

 private:
  std::vector<Violation>& out_;
};

constexpr std::size_t kUnbounded = static_cast<std::size_t>(-1);

}  // namespace

std::vector<Violation> validate_story(const Story& story, ValidationMode mode) {
  std::vector<Violation> out;
  Checker check(out);
  const auto& m = story.metadata;
  const bool publish = mode == ValidationMode::kPublish;

  check.text("metadata.creator", m.creator, kUnbounded, true);
  check.text("metadata.original_creator", m.original_creator, kUnbounded, true);
  check.text("metadata.title", m.title, kMaxTitleLength, publish);
  check.text("metadata.description", m.description, kMaxDescriptionLength, publish);
  if (m.created_at < 0) check.fail("metadata.created_at", "must be >= 0");
  if (m.format_version.major != kCurrentFormatVersion.major || m.format_version.minor < 0) {
    check.fail("metadata.format_version", "major version must be 1");
  }
  if (!m.parent_story && m.original_creator != m.creator) {
    check.fail("metadata.original_creator", "must equal creator when there is no parent story");
  }
  if (m.parent_story.has_value() != m.parent_creator.has_value()) {
    check.fail("metadata.parent_creator", "must be present exactly when parent_story is present");
  }
  if (m.parent_creator) check.text("metadata.parent_creator", *m.parent_creator, kUnbounded, true);
  if (m.placement_hints) check.text("metadata.placement_hints.note", m.placement_hints->note, kMaxNoteLength, false);

  if (story.scenes.empty()) check.fail("scenes.count", "must be >= 1");

  std::set<ObjectId> object_ids;
  std::set<SceneId> scene_ids;
  for (std::size_t si = 0; si < story.scenes.size(); ++si) {
    const auto& scene = story.scenes[si];
    const std::string sp = "scenes[" + std::to_string(si) + "]";
    if (scene.index != static_cast<int>(si)) {
      check.fail(sp + ".index", "scene indices must be contiguous 0..n-1 in order");
    }
    if (!scene_ids.insert(scene.scene_id).second) check.fail(sp + ".scene_id", "must be unique within the story");
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      const auto& obj = scene.objects[oi];
      const std::string op = sp + ".objects[" + std::to_string(oi) + "]";
      if (!object_ids.insert(obj.object_id).second) {
        check.fail(op + ".object_id", "object_id must be unique within the story");
      }
      check.text(op + ".asset.asset_key", obj.asset.asset_key, kUnbounded, true);
      check.text(op + ".asset.display_name", obj.asset.display_name, kUnbounded, true);
      if (obj.dialog) check.text(op + ".dialog.text", obj.dialog->text, kMaxDialogLength, true);
    }
  }

  if (publish && object_count(story) == 0) check.fail("scenes.objects", "a published story needs at least one object");
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].path << ": " << violations[i].rule;
  }
  return os.str();
}

}  // namespace microar
