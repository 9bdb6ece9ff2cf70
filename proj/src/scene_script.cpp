#include "microar/scene_script.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "microar/digest.hpp"

namespace microar::script {

namespace {

std::string located(const std::string& source, int line, int column, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ':' << line << ':' << column;
  os << ": " << message;
  return os.str();
}

std::string describe_located(const std::string& source, const std::vector<ScriptValidationError::Located>& vs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) os << '\n';
    os << located(source, vs[i].line, vs[i].column, vs[i].violation.path + ": " + vs[i].violation.rule);
  }
  return os.str();
}

}  // namespace

ScriptError::ScriptError(std::string source, int line, int column, std::string message)
    : std::runtime_error(located(source, line, column, message)), source_(std::move(source)), line_(line),
      column_(column), message_(std::move(message)) {}

ScriptValidationError::ScriptValidationError(std::string source, std::vector<Located> violations)
    : std::runtime_error(describe_located(source, violations)), violations_(std::move(violations)) {}

const std::vector<std::string>& preset_dialogs() {
  static const std::vector<std::string> presets = {
      "Hello!",        "Hi there!",      "Help!",       "Oh no!",        "Wow!",
      "Look at this!", "Where am I?",    "Follow me!",  "Let's go!",     "Watch out!",
      "Goodbye!",      "Thank you!",     "VROOM",       "Zzzz",          "Raawr",
      "Buzz buzz",     "Ha ha ha",       "Yum!",        "Ouch!",         "The end.",
  };
  return presets;
}

template <typename Id>
Id derived_id(std::string_view salt, std::string_view kind, std::string_view label) {
  std::string input;
  input.reserve(salt.size() + kind.size() + label.size() + 2);
  input.append(salt).append(1, '\0').append(kind).append(1, '\0').append(label);
  const auto d = sha256(input);
  std::uint64_t hi = 0, lo = 0;
  for (int i = 0; i < 8; ++i) hi = (hi << 8) | d[static_cast<std::size_t>(i)];
  for (int i = 8; i < 16; ++i) lo = (lo << 8) | d[static_cast<std::size_t>(i)];
  return Id(hi, lo);
}

template ObjectId derived_id<ObjectId>(std::string_view, std::string_view, std::string_view);
template SceneId derived_id<SceneId>(std::string_view, std::string_view, std::string_view);
template GroupId derived_id<GroupId>(std::string_view, std::string_view, std::string_view);

namespace {

// Compilation state shared by root scripts and edit scripts.
class Compiler {
 public:
  Compiler(std::string source, const catalog::AssetCatalog& catalog) : source_(std::move(source)), catalog_(catalog) {}

  YAML::Node parse(std::string_view text) {
    try {
      auto root = YAML::Load(std::string(text));
      if (!root.IsMap()) throw ScriptError(source_, root.IsDefined() ? root.Mark().line + 1 : 0, 1,
                                           "script must be a mapping");
      return root;
    } catch (const YAML::ParserException& e) {
      throw ScriptError(source_, e.mark.line + 1, e.mark.column + 1, e.msg);
    }
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    const auto m = at.Mark();
    if (m.is_null()) throw ScriptError(source_, 0, 0, message);
    throw ScriptError(source_, m.line + 1, m.column + 1, message);
  }

  void allow_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.Scalar();
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) fail(kv.first, "unknown key '" + key + "'");
    }
  }

  YAML::Node require(const YAML::Node& map, const std::string& key) const {
    const auto n = map[key];
    if (!n) fail(map, "missing '" + key + "'");
    return n;
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.Scalar();
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    const auto& s = n.Scalar();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) fail(n, what + " must be a finite number");
    return v;
  }

  std::int64_t integer(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be an integer");
    const auto& s = n.Scalar();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno == ERANGE) fail(n, what + " must be an integer");
    return v;
  }

  std::vector<double> numbers(const YAML::Node& n, std::size_t count, const std::string& what) const {
    if (!n.IsSequence() || n.size() != count) fail(n, what + " must be a list of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& v : n) out.push_back(number(v, what));
    return out;
  }

  Vec3 vec3(const YAML::Node& n, const std::string& what) const {
    const auto v = numbers(n, 3, what);
    return {v[0], v[1], v[2]};
  }

  void mark(const std::string& path, const YAML::Node& n) {
    if (n && !n.Mark().is_null()) marks_[path] = n.Mark();
  }

  // Longest recorded path that prefixes the violation path.
  ScriptValidationError::Located locate(const Violation& v) const {
    ScriptValidationError::Located out{v, 0, 0};
    std::size_t best = 0;
    for (const auto& [path, m] : marks_) {
      const bool prefix = v.path.compare(0, path.size(), path) == 0 &&
                          (v.path.size() == path.size() || v.path[path.size()] == '.' || v.path[path.size()] == '[');
      if (prefix && path.size() >= best) {
        best = path.size();
        out.line = m.line + 1;
        out.column = m.column + 1;
      }
    }
    return out;
  }

  void validate(const Story& story) const {
    const auto vs = validate_story(story, ValidationMode::kDraft);
    if (vs.empty()) return;
    std::vector<ScriptValidationError::Located> out;
    for (const auto& v : vs) out.push_back(locate(v));
    throw ScriptValidationError(source_, std::move(out));
  }

  AssetRef resolve_asset(const YAML::Node& obj) const {
    const auto query = obj["asset"];
    const auto key = obj["asset_key"];
    if (query && key) fail(obj, "give either 'asset' or 'asset_key', not both");
    if (query) {
      const auto q = text(query, "asset");
      const auto hits = catalog_.search(q, 1);
      if (hits.empty()) fail(query, "no asset matches query '" + q + "'");
      return {hits[0].asset_key, hits[0].display_name};
    }
    if (key) {
      const auto k = text(key, "asset_key");
      const auto rec = catalog_.find(k);
      if (!rec) fail(key, "asset key '" + k + "' is not in the catalog");
      return {rec->asset_key, rec->display_name};
    }
    fail(obj, "object needs 'asset' (a search query) or 'asset_key'");
  }

  Transform transform(const YAML::Node& obj, const Transform& base = Transform()) const {
    Vec3 position = base.position();
    Quat rotation = base.rotation();
    double scale = base.scale();
    if (const auto p = obj["position"]) position = vec3(p, "position");
    const auto r = obj["rotation"];
    const auto yaw = obj["yaw_deg"];
    if (r && yaw) fail(obj, "give either 'rotation' or 'yaw_deg', not both");
    if (r) {
      const auto q = numbers(r, 4, "rotation");
      rotation = {q[0], q[1], q[2], q[3]};
    }
    if (yaw) {
      const double half = number(yaw, "yaw_deg") * std::numbers::pi / 360.0;
      rotation = {std::cos(half), 0.0, std::sin(half), 0.0};
    }
    if (const auto s = obj["scale"]) scale = number(s, "scale");
    try {
      return quantize_transform(position, rotation, scale);
    } catch (const InvariantError& e) {
      fail(obj, e.what());
    }
  }

  DialogBalloon dialog(const YAML::Node& n) const {
    if (n.IsScalar()) return make_dialog(n.Scalar());
    allow_keys(n, {"text", "preset", "offset"});
    return dialog_fields(n);
  }

  // Reads text/preset/offset from a mapping that may carry other keys.
  DialogBalloon dialog_fields(const YAML::Node& n) const {
    const auto t = n["text"];
    const auto p = n["preset"];
    if (static_cast<bool>(t) == static_cast<bool>(p)) fail(n, "dialog needs exactly one of 'text' or 'preset'");
    std::string s;
    if (t) {
      s = text(t, "dialog text");
    } else {
      s = text(p, "dialog preset");
      const auto& presets = preset_dialogs();
      if (std::find(presets.begin(), presets.end(), s) == presets.end()) fail(p, "unknown dialog preset '" + s + "'");
    }
    const Vec3 offset = n["offset"] ? vec3(n["offset"], "dialog offset") : Vec3{};
    return make_dialog(s, offset);
  }

  PlacedObject object(const YAML::Node& n, const std::string& salt, const std::string& default_label,
                      const std::string& path) {
    allow_keys(n, {"label", "asset", "asset_key", "position", "rotation", "yaw_deg", "scale", "group", "dialog"});
    mark(path, n);
    const auto label = n["label"] ? text(n["label"], "label") : default_label;
    if (!labels_.insert("object\n" + label).second) fail(n, "duplicate object label '" + label + "'");
    PlacedObject o;
    o.object_id = derived_id<ObjectId>(salt, "object", label);
    o.asset = resolve_asset(n);
    mark(path + ".asset", n["asset"] ? n["asset"] : n["asset_key"]);
    o.transform = transform(n);
    if (const auto g = n["group"]) o.group_id = derived_id<GroupId>(salt, "group", text(g, "group"));
    if (const auto d = n["dialog"]) {
      o.dialog = dialog(d);
      mark(path + ".dialog", d);
    }
    return o;
  }

  Scene scene(const YAML::Node& n, const std::string& salt, const std::string& default_label, const std::string& path) {
    allow_keys(n, {"label", "objects", "at"});
    mark(path, n);
    const auto label = n["label"] ? text(n["label"], "label") : default_label;
    if (!labels_.insert("scene\n" + label).second) fail(n, "duplicate scene label '" + label + "'");
    Scene s;
    s.scene_id = derived_id<SceneId>(salt, "scene", label);
    if (const auto objs = n["objects"]) {
      if (!objs.IsSequence()) fail(objs, "objects must be a list");
      for (std::size_t j = 0; j < objs.size(); ++j) {
        s.objects.push_back(object(objs[j], salt, label + "/object-" + std::to_string(j),
                                   path + ".objects[" + std::to_string(j) + "]"));
      }
    }
    return s;
  }

  PlacementHints hints(const YAML::Node& n) const {
    allow_keys(n, {"surface_class", "min_extents", "note"});
    PlacementHints h;
    if (const auto c = n["surface_class"]) {
      const auto parsed = parse_surface_class(text(c, "surface_class"));
      if (!parsed) fail(c, "unknown surface class '" + c.Scalar() + "'");
      h.surface_class = *parsed;
    }
    if (const auto e = n["min_extents"]) {
      const auto v = numbers(e, 2, "min_extents");
      try {
        // Stored on the micrometer grid.
        h.min_extents = Extents(std::round(v[0] * 1e6) / 1e6, std::round(v[1] * 1e6) / 1e6);
      } catch (const InvariantError& err) {
        fail(e, err.what());
      }
    }
    if (const auto note = n["note"]) h.note = text(note, "note");
    return h;
  }

  // Index of a scene given as a 0-based position or a scene id.
  std::size_t scene_ref(const Story& s, const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "scene must be an index or a scene id");
    const auto& v = n.Scalar();
    if (v.size() == 32) {
      try {
        const auto id = SceneId::parse(v);
        for (std::size_t i = 0; i < s.scenes.size(); ++i)
          if (s.scenes[i].scene_id == id) return i;
      } catch (const InvariantError&) {
      }
      fail(n, "no scene with id " + v);
    }
    const auto i = integer(n, "scene");
    if (i < 0 || static_cast<std::size_t>(i) >= s.scenes.size())
      fail(n, "scene index " + v + " is out of range (story has " + std::to_string(s.scenes.size()) + ")");
    return static_cast<std::size_t>(i);
  }

  std::size_t object_ref(const Scene& s, const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "object must be an index or an object id");
    const auto& v = n.Scalar();
    if (v.size() == 32) {
      try {
        const auto id = ObjectId::parse(v);
        for (std::size_t i = 0; i < s.objects.size(); ++i)
          if (s.objects[i].object_id == id) return i;
      } catch (const InvariantError&) {
      }
      fail(n, "no object with id " + v + " in this scene");
    }
    const auto i = integer(n, "object");
    if (i < 0 || static_cast<std::size_t>(i) >= s.objects.size())
      fail(n, "object index " + v + " is out of range (scene has " + std::to_string(s.objects.size()) + ")");
    return static_cast<std::size_t>(i);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  const catalog::AssetCatalog& catalog_;
  std::map<std::string, YAML::Mark> marks_;
  std::set<std::string> labels_;
};

void renumber(Story& s) {
  for (std::size_t i = 0; i < s.scenes.size(); ++i) s.scenes[i].index = static_cast<int>(i);
}

}  // namespace

Story compile_script(std::string_view text, const catalog::AssetCatalog& catalog, const std::string& source_name) {
  Compiler c(source_name, catalog);
  const auto root = c.parse(text);
  c.allow_keys(root, {"seed", "metadata", "scenes"});

  const auto meta = c.require(root, "metadata");
  c.allow_keys(meta, {"creator", "title", "description", "created_at", "placement_hints"});
  c.mark("metadata", meta);
  Story story;
  auto& m = story.metadata;
  m.creator = c.text(c.require(meta, "creator"), "creator");
  c.mark("metadata.creator", meta["creator"]);
  c.mark("metadata.original_creator", meta["creator"]);
  m.original_creator = m.creator;
  if (const auto t = meta["title"]) {
    m.title = c.text(t, "title");
    c.mark("metadata.title", t);
  }
  if (const auto d = meta["description"]) {
    m.description = c.text(d, "description");
    c.mark("metadata.description", d);
  }
  if (const auto t = meta["created_at"]) {
    m.created_at = c.integer(t, "created_at");
    c.mark("metadata.created_at", t);
  }
  if (const auto h = meta["placement_hints"]) {
    m.placement_hints = c.hints(h);
    c.mark("metadata.placement_hints", h);
  }

  const std::string seed = root["seed"] ? c.text(root["seed"], "seed") : m.creator + "/" + m.title;
  const auto scenes = c.require(root, "scenes");
  if (!scenes.IsSequence()) c.fail(scenes, "scenes must be a list");
  c.mark("scenes", scenes);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto path = "scenes[" + std::to_string(i) + "]";
    if (scenes[i]["at"]) c.fail(scenes[i]["at"], "'at' is only valid in edit scripts");
    story.scenes.push_back(c.scene(scenes[i], seed, "scene-" + std::to_string(i), path));
  }
  renumber(story);
  c.validate(story);
  return story;
}

Story load_script(const std::filesystem::path& path, const catalog::AssetCatalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScriptError(path.string(), 0, 0, "cannot open script");
  std::ostringstream ss;
  ss << in.rdbuf();
  return compile_script(ss.str(), catalog, path.string());
}

Story apply_edits(Story draft, std::string_view text, const catalog::AssetCatalog& catalog, std::string_view salt_in,
                  const std::string& source_name) {
  Compiler c(source_name, catalog);
  const auto root = c.parse(text);
  c.allow_keys(root, {"seed", "title", "description", "created_at", "placement_hints", "edits"});
  auto& m = draft.metadata;
  if (const auto t = root["title"]) {
    m.title = c.text(t, "title");
    c.mark("metadata.title", t);
  }
  if (const auto d = root["description"]) {
    m.description = c.text(d, "description");
    c.mark("metadata.description", d);
  }
  if (const auto t = root["created_at"]) m.created_at = c.integer(t, "created_at");
  if (const auto h = root["placement_hints"]) m.placement_hints = c.hints(h);

  std::string salt(salt_in);
  if (const auto s = root["seed"]) salt += "/" + c.text(s, "seed");

  const auto edits = root["edits"];
  if (edits && !edits.IsSequence()) c.fail(edits, "edits must be a list");
  for (std::size_t k = 0; edits && k < edits.size(); ++k) {
    const auto e = edits[k];
    if (!e.IsMap() || e.size() != 1) c.fail(e, "each edit must be a mapping with exactly one operation");
    const auto op = e.begin()->first.Scalar();
    const auto body = e.begin()->second;
    const auto tag = "edit-" + std::to_string(k);

    if (op == "add_scene") {
      const auto at = body["at"] ? c.integer(body["at"], "at") : static_cast<std::int64_t>(draft.scenes.size());
      if (at < 0 || static_cast<std::size_t>(at) > draft.scenes.size()) c.fail(body["at"], "'at' is out of range");
      auto scene = c.scene(body, salt, tag, "scenes[" + std::to_string(at) + "]");
      draft.scenes.insert(draft.scenes.begin() + at, std::move(scene));
    } else if (op == "remove_scene") {
      c.allow_keys(body, {"scene"});
      const auto i = c.scene_ref(draft, c.require(body, "scene"));
      draft.scenes.erase(draft.scenes.begin() + static_cast<std::ptrdiff_t>(i));
    } else if (op == "move_scene") {
      c.allow_keys(body, {"scene", "to"});
      const auto from = c.scene_ref(draft, c.require(body, "scene"));
      const auto to = c.integer(c.require(body, "to"), "to");
      if (to < 0 || static_cast<std::size_t>(to) >= draft.scenes.size()) c.fail(body["to"], "'to' is out of range");
      auto moved = std::move(draft.scenes[from]);
      draft.scenes.erase(draft.scenes.begin() + static_cast<std::ptrdiff_t>(from));
      draft.scenes.insert(draft.scenes.begin() + to, std::move(moved));
    } else if (op == "add_object") {
      c.allow_keys(body, {"scene", "object"});
      const auto i = c.scene_ref(draft, c.require(body, "scene"));
      auto& scene = draft.scenes[i];
      const auto path = "scenes[" + std::to_string(i) + "].objects[" + std::to_string(scene.objects.size()) + "]";
      scene.objects.push_back(c.object(c.require(body, "object"), salt, tag, path));
    } else if (op == "remove_object") {
      c.allow_keys(body, {"scene", "object"});
      auto& scene = draft.scenes[c.scene_ref(draft, c.require(body, "scene"))];
      const auto j = c.object_ref(scene, c.require(body, "object"));
      scene.objects.erase(scene.objects.begin() + static_cast<std::ptrdiff_t>(j));
    } else if (op == "edit_dialog") {
      c.allow_keys(body, {"scene", "object", "text", "preset", "offset", "remove"});
      const auto i = c.scene_ref(draft, c.require(body, "scene"));
      auto& scene = draft.scenes[i];
      const auto j = c.object_ref(scene, c.require(body, "object"));
      auto& obj = scene.objects[j];
      if (body["remove"]) {
        if (body["text"] || body["preset"]) c.fail(body, "'remove' cannot be combined with new text");
        obj.dialog.reset();
      } else {
        if (!body["text"] && !body["preset"]) c.fail(body, "edit_dialog needs 'text', 'preset' or 'remove'");
        auto next = c.dialog_fields(body);
        if (!body["offset"] && obj.dialog) next = make_dialog(next.text, obj.dialog->offset);
        obj.dialog = std::move(next);
      }
      c.mark("scenes[" + std::to_string(i) + "].objects[" + std::to_string(j) + "].dialog", body);
    } else if (op == "transform_object") {
      c.allow_keys(body, {"scene", "object", "position", "rotation", "yaw_deg", "scale"});
      auto& scene = draft.scenes[c.scene_ref(draft, c.require(body, "scene"))];
      auto& obj = scene.objects[c.object_ref(scene, c.require(body, "object"))];
      obj.transform = c.transform(body, obj.transform);
    } else {
      c.fail(e.begin()->first, "unknown edit operation '" + op + "'");
    }
  }
  renumber(draft);
  c.validate(draft);
  return draft;
}

}  // namespace microar::script
