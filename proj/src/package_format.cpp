#include "microar/package_format.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "microar/digest.hpp"

namespace microar {

using nlohmann::json;

namespace {

// Schema problems inside a part surface as MalformedJson; invariant
// problems (off-sphere quaternions, bad ids) as InvalidStory.
[[noreturn]] void schema_error(std::string_view part, const std::string& what) {
  throw DecodeError(DecodeErrorKind::kMalformedJson, std::string(part) + ": " + what);
}

const json& field(const json& obj, std::string_view part, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(part, std::string("missing field '") + key + "'");
  return *it;
}

const json* optional_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::int64_t as_int(const json& v, std::string_view part, const char* what) {
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      schema_error(part, std::string(what) + " out of range");
    }
    return static_cast<std::int64_t>(v.get<std::uint64_t>());
  }
  if (!v.is_number_integer()) schema_error(part, std::string(what) + " must be an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const json& v, std::string_view part, const char* what) {
  if (!v.is_string()) schema_error(part, std::string(what) + " must be a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, std::string_view part, const char* what) {
  if (!v.is_array()) schema_error(part, std::string(what) + " must be an array");
  return v;
}

template <std::size_t N>
std::array<std::int64_t, N> as_int_array(const json& v, std::string_view part, const char* what) {
  as_array(v, part, what);
  if (v.size() != N) schema_error(part, std::string(what) + " must have " + std::to_string(N) + " elements");
  std::array<std::int64_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_int(v[i], part, what);
  return out;
}

template <typename Fn>
auto invariant(Fn&& fn, const std::string& path) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InvariantError& e) {
    throw DecodeError(DecodeErrorKind::kInvalidStory, path + ": " + e.what(), {{path, e.what()}});
  }
}

constexpr double kUm = static_cast<double>(Transform::kPositionUnitsPerMeter);

std::int64_t to_um(double meters) { return static_cast<std::int64_t>(std::nearbyint(meters * kUm)); }

json vec_um(const Vec3& v) { return json::array({to_um(v.x), to_um(v.y), to_um(v.z)}); }

Vec3 vec_from_um(const std::array<std::int64_t, 3>& a) {
  return {static_cast<double>(a[0]) / kUm, static_cast<double>(a[1]) / kUm, static_cast<double>(a[2]) / kUm};
}

bool on_um_grid(double meters) {
  return std::isfinite(meters) && static_cast<double>(to_um(meters)) / kUm == meters;
}

json parse_part(const std::map<std::string, Bytes, std::less<>>& parts, std::string_view name) {
  auto it = parts.find(name);
  if (it == parts.end()) {
    throw DecodeError(DecodeErrorKind::kMissingPart, "package is missing " + std::string(name));
  }
  json j;
  try {
    j = json::parse(it->second);
  } catch (const json::parse_error& e) {
    throw DecodeError(DecodeErrorKind::kMalformedJson, std::string(name) + ": " + e.what());
  }
  if (!j.is_object()) schema_error(name, "top level must be an object");
  return j;
}

std::map<std::string, Bytes, std::less<>> read_parts(std::string_view bytes) {
  std::vector<zip::Entry> entries;
  try {
    entries = zip::read(bytes);
  } catch (const zip::ZipError& e) {
    throw DecodeError(DecodeErrorKind::kMalformedArchive, e.what());
  }
  std::map<std::string, Bytes, std::less<>> parts;
  for (auto& e : entries) parts.emplace(std::move(e.name), std::move(e.data));  // first occurrence wins
  return parts;
}

FormatVersion read_version(const json& metadata) {
  const json* v = optional_field(metadata, "format_version");
  if (!v) throw DecodeError(DecodeErrorKind::kMissingVersion, "metadata.json has no format_version");
  if (!v->is_object()) schema_error(kMetadataPart, "format_version must be an object");
  FormatVersion version{static_cast<int>(as_int(field(*v, kMetadataPart, "major"), kMetadataPart, "major")),
                        static_cast<int>(as_int(field(*v, kMetadataPart, "minor"), kMetadataPart, "minor"))};
  if (version.major != kCurrentFormatVersion.major) {
    throw DecodeError(DecodeErrorKind::kUnsupportedMajor,
                      "unsupported format major version " + std::to_string(version.major));
  }
  return version;
}

Metadata metadata_from_json(const json& j, PackageKind* kind_out) {
  constexpr auto part = kMetadataPart;
  Metadata m;
  m.format_version = read_version(j);
  m.creator = as_string(field(j, part, "creator"), part, "creator");
  m.title = as_string(field(j, part, "title"), part, "title");
  m.description = as_string(field(j, part, "description"), part, "description");
  m.original_creator = as_string(field(j, part, "original_creator"), part, "original_creator");
  m.created_at = as_int(field(j, part, "created_at"), part, "created_at");
  if (const json* p = optional_field(j, "parent_story")) {
    auto hex = as_string(*p, part, "parent_story");
    m.parent_story = invariant([&] { return StoryId::parse(hex); }, "metadata.parent_story");
  }
  if (const json* p = optional_field(j, "parent_creator")) {
    m.parent_creator = as_string(*p, part, "parent_creator");
  }
  if (const json* h = optional_field(j, "placement_hints")) {
    if (!h->is_object()) schema_error(part, "placement_hints must be an object");
    PlacementHints hints;
    auto cls = as_string(field(*h, part, "surface_class"), part, "surface_class");
    auto parsed = parse_surface_class(cls);
    if (!parsed) {
      throw DecodeError(DecodeErrorKind::kInvalidStory, "unknown surface_class '" + cls + "'",
                        {{"metadata.placement_hints.surface_class", "unknown surface class"}});
    }
    hints.surface_class = *parsed;
    if (const json* n = optional_field(*h, "note")) hints.note = as_string(*n, part, "note");
    if (const json* e = optional_field(*h, "min_extents")) {
      if (!e->is_object()) schema_error(part, "min_extents must be an object");
      const double w = static_cast<double>(as_int(field(*e, part, "width_um"), part, "width_um")) / kUm;
      const double d = static_cast<double>(as_int(field(*e, part, "depth_um"), part, "depth_um")) / kUm;
      hints.min_extents = invariant([&] { return Extents(w, d); }, "metadata.placement_hints.min_extents");
    }
    m.placement_hints = std::move(hints);
  }
  bool draft = false;
  if (const json* d = optional_field(j, "draft")) {
    if (!d->is_boolean()) schema_error(part, "draft must be a boolean");
    draft = d->get<bool>();
  }
  if (kind_out) *kind_out = draft ? PackageKind::kDraft : PackageKind::kPublished;
  return m;
}

}  // namespace

std::string_view to_string(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::kMalformedArchive: return "MalformedArchive";
    case DecodeErrorKind::kMissingPart: return "MissingPart";
    case DecodeErrorKind::kMalformedJson: return "MalformedJson";
    case DecodeErrorKind::kMissingVersion: return "MissingVersion";
    case DecodeErrorKind::kUnsupportedMajor: return "UnsupportedMajor";
    case DecodeErrorKind::kInvalidStory: return "InvalidStory";
  }
  return "Unknown";
}

DecodeError::DecodeError(DecodeErrorKind kind, const std::string& message, std::vector<Violation> violations)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      violations_(std::move(violations)) {}

EncodeError::EncodeError(std::vector<Violation> violations)
    : std::invalid_argument("story is not draft-valid: " + describe(violations)), violations_(std::move(violations)) {}

std::string canonical_dump(const json& value) { return value.dump(-1, ' ', false, json::error_handler_t::strict); }

json metadata_to_json(const Metadata& m, PackageKind kind) {
  json j = json::object();
  j["creator"] = m.creator;
  j["title"] = m.title;
  j["description"] = m.description;
  j["original_creator"] = m.original_creator;
  j["created_at"] = m.created_at;
  j["format_version"] = {{"major", m.format_version.major}, {"minor", m.format_version.minor}};
  if (m.parent_story) j["parent_story"] = m.parent_story->hex();
  if (m.parent_creator) j["parent_creator"] = *m.parent_creator;
  if (m.placement_hints) {
    const auto& h = *m.placement_hints;
    json hj = {{"surface_class", std::string(to_string(h.surface_class))}, {"note", h.note}};
    if (h.min_extents) {
      hj["min_extents"] = {{"width_um", to_um(h.min_extents->width())}, {"depth_um", to_um(h.min_extents->depth())}};
    }
    j["placement_hints"] = std::move(hj);
  }
  if (kind == PackageKind::kDraft) j["draft"] = true;
  return j;
}

PackageParts encode_parts(const Story& story, PackageKind kind) {
  auto violations = validate_story(story, ValidationMode::kDraft);
  // Values off the micrometer grid would not survive the integer encoding.
  const auto& hints = story.metadata.placement_hints;
  if (hints && hints->min_extents &&
      !(on_um_grid(hints->min_extents->width()) && on_um_grid(hints->min_extents->depth()))) {
    violations.push_back({"metadata.placement_hints.min_extents", "must lie on the micrometer grid"});
  }
  for (std::size_t si = 0; si < story.scenes.size(); ++si) {
    for (std::size_t oi = 0; oi < story.scenes[si].objects.size(); ++oi) {
      const auto& d = story.scenes[si].objects[oi].dialog;
      if (d && !(on_um_grid(d->offset.x) && on_um_grid(d->offset.y) && on_um_grid(d->offset.z))) {
        violations.push_back({"scenes[" + std::to_string(si) + "].objects[" + std::to_string(oi) + "].dialog.offset",
                              "must lie on the micrometer grid"});
      }
    }
  }
  if (!violations.empty()) throw EncodeError(std::move(violations));

  json content_scenes = json::array();
  json layout_scenes = json::array();
  for (const auto& scene : story.scenes) {
    json content_objects = json::array();
    json layout_objects = json::array();
    for (const auto& obj : scene.objects) {
      json c = {{"object_id", obj.object_id.hex()},
                {"asset", {{"key", obj.asset.asset_key}, {"display_name", obj.asset.display_name}}}};
      if (obj.dialog) c["dialog"] = {{"text", obj.dialog->text}};
      content_objects.push_back(std::move(c));

      const auto& t = obj.transform;
      json l = {{"object_id", obj.object_id.hex()},
                {"position_um", t.position_um()},
                {"rotation_nano", t.rotation_nano()},
                {"scale_ppm", t.scale_ppm()}};
      if (obj.group_id) l["group_id"] = obj.group_id->hex();
      if (obj.dialog) l["dialog_offset_um"] = vec_um(obj.dialog->offset);
      layout_objects.push_back(std::move(l));
    }
    content_scenes.push_back({{"scene_id", scene.scene_id.hex()}, {"objects", std::move(content_objects)}});
    layout_scenes.push_back(
        {{"scene_id", scene.scene_id.hex()}, {"index", scene.index}, {"objects", std::move(layout_objects)}});
  }

  PackageParts parts;
  parts.metadata = canonical_dump(metadata_to_json(story.metadata, kind));
  parts.content = canonical_dump(json{{"scenes", std::move(content_scenes)}});
  parts.layout = canonical_dump(json{{"scenes", std::move(layout_scenes)}});
  return parts;
}

Bytes encode(const Story& story, PackageKind kind) {
  auto parts = encode_parts(story, kind);
  return zip::write_stored({{std::string(kMetadataPart), std::move(parts.metadata)},
                            {std::string(kContentPart), std::move(parts.content)},
                            {std::string(kLayoutPart), std::move(parts.layout)}});
}

Story story_from_parts(const json& metadata, const json& content, const json& layout, PackageKind* kind_out) {
  Story story;
  story.metadata = metadata_from_json(metadata, kind_out);

  const json& cscenes = as_array(field(content, kContentPart, "scenes"), kContentPart, "scenes");
  const json& lscenes = as_array(field(layout, kLayoutPart, "scenes"), kLayoutPart, "scenes");
  if (cscenes.size() != lscenes.size()) {
    throw DecodeError(DecodeErrorKind::kInvalidStory, "content and layout disagree on scene count",
                      {{"scenes", "content and layout must list the same scenes"}});
  }

  for (std::size_t si = 0; si < cscenes.size(); ++si) {
    const std::string sp = "scenes[" + std::to_string(si) + "]";
    const json& cs = cscenes[si];
    const json& ls = lscenes[si];
    if (!cs.is_object() || !ls.is_object()) schema_error(kContentPart, "scene entries must be objects");
    Scene scene;
    const auto sid = as_string(field(cs, kContentPart, "scene_id"), kContentPart, "scene_id");
    if (as_string(field(ls, kLayoutPart, "scene_id"), kLayoutPart, "scene_id") != sid) {
      throw DecodeError(DecodeErrorKind::kInvalidStory, sp + ": content and layout scene ids differ",
                        {{sp + ".scene_id", "content and layout must agree"}});
    }
    scene.scene_id = invariant([&] { return SceneId::parse(sid); }, sp + ".scene_id");
    scene.index = static_cast<int>(as_int(field(ls, kLayoutPart, "index"), kLayoutPart, "index"));

    const json& cobjs = as_array(field(cs, kContentPart, "objects"), kContentPart, "objects");
    const json& lobjs = as_array(field(ls, kLayoutPart, "objects"), kLayoutPart, "objects");
    if (cobjs.size() != lobjs.size()) {
      throw DecodeError(DecodeErrorKind::kInvalidStory, sp + ": content and layout disagree on object count",
                        {{sp + ".objects", "content and layout must list the same objects"}});
    }
    for (std::size_t oi = 0; oi < cobjs.size(); ++oi) {
      const std::string op = sp + ".objects[" + std::to_string(oi) + "]";
      const json& co = cobjs[oi];
      const json& lo = lobjs[oi];
      if (!co.is_object() || !lo.is_object()) schema_error(kLayoutPart, "object entries must be objects");
      PlacedObject obj;
      const auto oid = as_string(field(co, kContentPart, "object_id"), kContentPart, "object_id");
      if (as_string(field(lo, kLayoutPart, "object_id"), kLayoutPart, "object_id") != oid) {
        throw DecodeError(DecodeErrorKind::kInvalidStory, op + ": content and layout object ids differ",
                          {{op + ".object_id", "content and layout must agree"}});
      }
      obj.object_id = invariant([&] { return ObjectId::parse(oid); }, op + ".object_id");

      const json& asset = field(co, kContentPart, "asset");
      if (!asset.is_object()) schema_error(kContentPart, "asset must be an object");
      obj.asset.asset_key = as_string(field(asset, kContentPart, "key"), kContentPart, "asset.key");
      obj.asset.display_name = as_string(field(asset, kContentPart, "display_name"), kContentPart, "display_name");

      const auto pos = as_int_array<3>(field(lo, kLayoutPart, "position_um"), kLayoutPart, "position_um");
      const auto rot = as_int_array<4>(field(lo, kLayoutPart, "rotation_nano"), kLayoutPart, "rotation_nano");
      const auto scale = as_int(field(lo, kLayoutPart, "scale_ppm"), kLayoutPart, "scale_ppm");
      obj.transform = invariant([&] { return Transform::from_scaled(pos, rot, scale); }, op + ".transform");

      if (const json* g = optional_field(lo, "group_id")) {
        auto gid = as_string(*g, kLayoutPart, "group_id");
        obj.group_id = invariant([&] { return GroupId::parse(gid); }, op + ".group_id");
      }
      const json* dialog = optional_field(co, "dialog");
      const json* offset = optional_field(lo, "dialog_offset_um");
      if (dialog) {
        if (!dialog->is_object()) schema_error(kContentPart, "dialog must be an object");
        DialogBalloon balloon;
        balloon.text = as_string(field(*dialog, kContentPart, "text"), kContentPart, "dialog.text");
        if (offset) balloon.offset = vec_from_um(as_int_array<3>(*offset, kLayoutPart, "dialog_offset_um"));
        obj.dialog = std::move(balloon);
      } else if (offset) {
        throw DecodeError(DecodeErrorKind::kInvalidStory, op + ": dialog offset without dialog",
                          {{op + ".dialog", "layout has an offset for a missing dialog"}});
      }
      scene.objects.push_back(std::move(obj));
    }
    story.scenes.push_back(std::move(scene));
  }

  auto violations = validate_story(story, ValidationMode::kDraft);
  if (!violations.empty()) {
    throw DecodeError(DecodeErrorKind::kInvalidStory, describe(violations), std::move(violations));
  }
  return story;
}

DecodedPackage decode_package(std::string_view bytes) {
  const auto parts = read_parts(bytes);
  // Version is checked before anything else so a future major fails cleanly.
  const json metadata = parse_part(parts, kMetadataPart);
  read_version(metadata);
  const json content = parse_part(parts, kContentPart);
  const json layout = parse_part(parts, kLayoutPart);
  DecodedPackage out;
  out.story = story_from_parts(metadata, content, layout, &out.kind);
  return out;
}

Story decode(std::string_view bytes) { return decode_package(bytes).story; }

StoryId story_id(const Story& story) { return StoryId::from_digest(sha256(encode(story))); }

FormatVersion check_version(std::string_view bytes) {
  const auto parts = read_parts(bytes);
  return read_version(parse_part(parts, kMetadataPart));
}

}  // namespace microar
