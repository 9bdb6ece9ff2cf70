// microar: command-line front end for building, checking, publishing and
// remixing stories.
//
// Exit codes: 0 success, 1 validation, 2 IO or network, 3 not found. Every
// failure prints one canonical JSON object on stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "microar/asset_catalog.hpp"
#include "microar/layout_engine.hpp"
#include "microar/package_format.hpp"
#include "microar/remix_engine.hpp"
#include "microar/repository_client.hpp"
#include "microar/scene_script.hpp"
#include "microar/svg_render.hpp"
#include "microar/synthetic_corpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace microar;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kNotFound = 3 };

struct CliFailure {
  int exit_code;
  json error;
};

[[noreturn]] void fail(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  throw CliFailure{code, std::move(extra)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(kIo, "IoError", "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(kIo, "IoError", "cannot write " + p.string());
}

json violations_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back({{"path", v.path}, {"rule", v.rule}});
  return out;
}

StoryId parse_story_id(const std::string& s) {
  if (!is_story_id_hex(s)) fail(kValidation, "BadArgument", "not a story id: " + s);
  return StoryId::parse(s);
}

struct Common {
  std::string server;
  std::string catalog_dir;
  std::unique_ptr<catalog::AssetCatalog> catalog;

  std::string server_url() const {
    if (!server.empty()) return server;
    if (const char* env = std::getenv("MICROAR_SERVER"); env && *env) return env;
    return "http://127.0.0.1:8080";
  }

  catalog::AssetCatalog& assets() {
    if (!catalog) {
      catalog = catalog_dir.empty() ? std::make_unique<catalog::AssetCatalog>()
                                    : std::make_unique<catalog::AssetCatalog>(fs::path(catalog_dir));
      catalog::install_builtin_assets(*catalog);
    }
    return *catalog;
  }

  client::RepositoryClient client() const { return client::RepositoryClient(server_url()); }
};

std::string listing_line(const repo::StoryListing& l) {
  std::ostringstream os;
  os << l.story_id.hex() << "  " << l.created_at << "  " << l.creator << "  scenes=" << l.scene_count
     << "  views=" << l.view_count;
  if (l.parent_story) os << "  parent=" << l.parent_story->hex().substr(0, 12);
  os << "  " << l.title;
  return os.str();
}

// Anchor and transform pairs with composed world poses, for clients that
// re-implement compose and need reference values.
json compose_fixtures(int count) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), ang(-3.14159, 3.14159), sc(0.2, 5.0), unit(-1.0, 1.0);
  json out = json::array();
  for (int i = 0; i < count; ++i) {
    const Plane plane{{pos(rng), pos(rng) * 0.5, pos(rng)}, ang(rng), Extents(4.0, 4.0), SurfaceClass::kTable};
    const layout::AnchorPose anchor(plane, {pos(rng) * 0.5, pos(rng) * 0.5}, ang(rng));
    const auto t = quantize_transform({pos(rng), pos(rng), pos(rng)}, {unit(rng), unit(rng), unit(rng), unit(rng)},
                                      sc(rng));
    const auto w = layout::compose(anchor, t);
    out.push_back({{"plane", {{"origin", {plane.origin.x, plane.origin.y, plane.origin.z}}, {"yaw", plane.yaw}}},
                   {"anchor", {{"position", {anchor.position().x, anchor.position().y}}, {"yaw", anchor.yaw()}}},
                   {"transform",
                    {{"position_um", t.position_um()}, {"rotation_nano", t.rotation_nano()}, {"scale_ppm", t.scale_ppm()}}},
                   {"world",
                    {{"position", {w.position.x, w.position.y, w.position.z}},
                     {"rotation", {w.rotation.w, w.rotation.x, w.rotation.y, w.rotation.z}},
                     {"scale", w.scale}}}});
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Build, check, publish and remix AR stories."};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--server", common.server, "Repository URL (default: $MICROAR_SERVER or http://127.0.0.1:8080)");
  app.add_option("--catalog", common.catalog_dir, "Local asset catalog directory (default: built-in assets in memory)");

  std::function<int()> action;

  // build
  std::string script_path, out_path;
  bool draft = false;
  auto* build = app.add_subcommand("build", "Compile a scene script into a .mar package");
  build->add_option("script", script_path, "Scene script (YAML or JSON)")->required();
  build->add_option("-o,--output", out_path, "Output .mar path")->required();
  build->add_flag("--draft", draft, "Mark the package as a draft");
  build->callback([&] {
    action = [&] {
      const auto story = script::load_script(script_path, common.assets());
      write_file(out_path, encode(story, draft ? PackageKind::kDraft : PackageKind::kPublished));
      std::cout << out_path << "\n";
      return kOk;
    };
  });

  // validate
  std::string package_path, mode = "publish";
  auto* validate = app.add_subcommand("validate", "Check a .mar package");
  validate->add_option("package", package_path)->required();
  validate->add_option("--mode", mode, "draft or publish")->check(CLI::IsMember({"draft", "publish"}));
  validate->callback([&] {
    action = [&] {
      const auto decoded = decode_package(read_file(package_path));
      const auto vs = validate_story(decoded.story, mode == "draft" ? ValidationMode::kDraft : ValidationMode::kPublish);
      if (!vs.empty()) fail(kValidation, "InvalidStory", describe(vs), {{"violations", violations_json(vs)}});
      // The repository refuses drafts, so they cannot pass publish mode.
      if (mode == "publish" && decoded.kind == PackageKind::kDraft)
        fail(kValidation, "DraftPackage", "package is marked as a draft");
      std::cout << "valid (" << mode << ")\n" << story_id(decoded.story).hex() << "\n";
      return kOk;
    };
  });

  // publish
  std::string creator;
  auto* publish = app.add_subcommand("publish", "Publish a .mar package to the repository");
  publish->add_option("package", package_path)->required();
  publish->add_option("--creator", creator, "Identity sent in the creator header (default: package creator)");
  publish->callback([&] {
    action = [&] {
      const auto bytes = read_file(package_path);
      std::optional<std::string> who;
      if (!creator.empty()) {
        who = creator;
      } else {
        try {
          who = decode(bytes).metadata.creator;
        } catch (const DecodeError&) {
          // Let the server report the decode failure.
        }
      }
      const auto r = common.client().publish(bytes, who);
      std::cout << (r.created ? "published" : "duplicate: already published") << "\n" << r.story_id.hex() << "\n";
      return kOk;
    };
  });

  // browse
  std::int64_t page = 1, page_size = 0;
  std::string creator_filter;
  bool as_json = false;
  auto* browse = app.add_subcommand("browse", "List published stories");
  browse->add_option("--page", page);
  browse->add_option("--page-size", page_size);
  browse->add_option("--creator", creator_filter);
  browse->add_flag("--json", as_json);
  browse->callback([&] {
    action = [&] {
      const auto p = common.client().list(page, page_size > 0 ? std::optional(page_size) : std::nullopt,
                                          creator_filter.empty() ? std::nullopt : std::optional(creator_filter));
      if (as_json) {
        std::cout << canonical_dump(repo::to_json(p)) << "\n";
        return kOk;
      }
      for (const auto& l : p.items) std::cout << listing_line(l) << "\n";
      std::cout << "page " << p.page << "/" << p.total_pages << " (" << p.total << " stories)\n";
      return kOk;
    };
  });

  // fetch
  std::string id_arg;
  auto* fetch = app.add_subcommand("fetch", "Download a published story");
  fetch->add_option("id", id_arg)->required();
  fetch->add_option("-o,--output", out_path)->required();
  fetch->callback([&] {
    action = [&] {
      write_file(out_path, common.client().fetch(parse_story_id(id_arg)));
      std::cout << out_path << "\n";
      return kOk;
    };
  });

  // remix
  std::string edits_path;
  std::int64_t created_at = -1;
  bool publish_remix = false;
  auto* remix_cmd = app.add_subcommand("remix", "Fetch a story, apply an edit script and write or publish the remix");
  remix_cmd->add_option("id", id_arg)->required();
  remix_cmd->add_option("--edits", edits_path, "Edit script (YAML or JSON)");
  remix_cmd->add_option("--creator", creator)->envname("MICROAR_CREATOR")->required();
  remix_cmd->add_option("--created-at", created_at, "Unix seconds (default: now)");
  remix_cmd->add_option("-o,--output", out_path);
  remix_cmd->add_flag("--publish", publish_remix);
  remix_cmd->callback([&] {
    action = [&] {
      if (out_path.empty() && !publish_remix) fail(kValidation, "BadArgument", "remix needs --output or --publish");
      const auto parent_id = parse_story_id(id_arg);
      auto cl = common.client();
      const auto parent = decode(cl.fetch(parent_id));
      auto draft_story = remix::derive_remix(parent, creator, created_at >= 0 ? created_at : std::time(nullptr));
      if (!edits_path.empty())
        draft_story = script::apply_edits(std::move(draft_story), read_file(edits_path), common.assets(),
                                          parent_id.hex(), edits_path);
      const auto bytes = encode(draft_story);
      if (!out_path.empty()) write_file(out_path, bytes);
      if (publish_remix) {
        const auto r = cl.publish(bytes, creator);
        std::cout << (r.created ? "published" : "duplicate: already published") << "\n" << r.story_id.hex() << "\n";
      } else {
        std::cout << out_path << "\n";
      }
      return kOk;
    };
  });

  // lineage
  auto* lineage_cmd = app.add_subcommand("lineage", "Show the remix chain from the root to a story");
  lineage_cmd->add_option("id", id_arg)->required();
  lineage_cmd->add_flag("--json", as_json);
  lineage_cmd->callback([&] {
    action = [&] {
      const auto chain = common.client().lineage(parse_story_id(id_arg));
      if (as_json) {
        json out = json::array();
        for (const auto& e : chain) {
          auto j = repo::to_json(e.listing);
          j["diff_from_parent"] = e.diff_from_parent ? remix::to_json(*e.diff_from_parent) : json(nullptr);
          out.push_back(std::move(j));
        }
        std::cout << canonical_dump({{"chain", out}}) << "\n";
        return kOk;
      }
      for (std::size_t i = 0; i < chain.size(); ++i) std::cout << i << "  " << listing_line(chain[i].listing) << "\n";
      std::cout << chain.back().listing.story_id.hex() << "\n";
      return kOk;
    };
  });

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics from the repository");
  stats->callback([&] {
    action = [&] {
      std::cout << canonical_dump(common.client().stats()) << "\n";
      return kOk;
    };
  });

  // seed-corpus
  std::uint64_t corpus_seed = 194;
  auto* seed_cmd = app.add_subcommand("seed-corpus", "Publish the synthetic reference corpus (194 stories)");
  seed_cmd->add_option("--seed", corpus_seed);
  seed_cmd->callback([&] {
    action = [&] {
      auto cl = common.client();
      int created = 0;
      const auto stories = corpus::synthetic_corpus({}, corpus_seed);
      for (const auto& s : stories) created += cl.publish(encode(s), s.metadata.creator).created ? 1 : 0;
      std::cout << "published " << created << " of " << stories.size() << "\n";
      return kOk;
    };
  });

  // render
  int scene_index = 0;
  std::string svg_path;
  auto* render = app.add_subcommand("render", "Write a top-down SVG preview of one scene");
  render->add_option("package", package_path)->required();
  render->add_option("scene", scene_index)->required();
  render->add_option("output", svg_path)->required();
  render->callback([&] {
    action = [&] {
      const auto story = decode(read_file(package_path));
      std::string svg;
      try {
        svg = render::render_scene_svg(story, scene_index, common.assets().bounds_lookup());
      } catch (const std::out_of_range& e) {
        fail(kNotFound, "NotFound", e.what());
      }
      write_file(svg_path, svg);
      std::cout << svg_path << "\n";
      return kOk;
    };
  });

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Summarize a .mar package as JSON");
  inspect->add_option("package", package_path)->required();
  inspect->callback([&] {
    action = [&] {
      const auto decoded = decode_package(read_file(package_path));
      const auto& s = decoded.story;
      const auto parts = encode_parts(s, decoded.kind);
      json scenes = json::array();
      const auto bounds = common.assets().bounds_lookup();
      for (const auto& sc : s.scenes) {
        const auto f = layout::scene_footprint(sc, bounds);
        scenes.push_back({{"scene_id", sc.scene_id.hex()},
                          {"index", sc.index},
                          {"objects", sc.objects.size()},
                          {"footprint", {{"width", f.width()}, {"depth", f.depth()}}}});
      }
      json out = {{"story_id", story_id(s).hex()},
                  {"draft", decoded.kind == PackageKind::kDraft},
                  {"metadata", json::parse(parts.metadata)},
                  {"scenes", scenes},
                  {"prefetch", catalog::prefetch_plan(s)},
                  {"publish_violations", violations_json(validate_story(s, ValidationMode::kPublish))}};
      std::cout << canonical_dump(out) << "\n";
      return kOk;
    };
  });

  // diff
  std::string child_path;
  auto* diff_cmd = app.add_subcommand("diff", "Object-level diff between a parent and a child package");
  diff_cmd->add_option("parent", package_path)->required();
  diff_cmd->add_option("child", child_path)->required();
  diff_cmd->callback([&] {
    action = [&] {
      const auto d = remix::diff(decode(read_file(package_path)), decode(read_file(child_path)));
      std::cout << canonical_dump(remix::to_json(d)) << "\n";
      return kOk;
    };
  });

  // dialogs
  auto* dialogs = app.add_subcommand("dialogs", "List the preset dialog texts");
  dialogs->callback([&] {
    action = [&] {
      for (const auto& d : script::preset_dialogs()) std::cout << d << "\n";
      return kOk;
    };
  });

  // search
  std::string query;
  int limit = 10;
  bool remote = false;
  auto* search = app.add_subcommand("search", "Search assets by keyword");
  search->add_option("query", query)->required();
  search->add_option("--limit", limit);
  search->add_flag("--remote", remote, "Search the repository's catalog instead of the local one");
  search->callback([&] {
    action = [&] {
      if (limit < 1) fail(kValidation, "BadArgument", "--limit must be positive");
      const auto hits = remote ? common.client().search_assets(query, limit) : common.assets().search(query, limit);
      for (const auto& r : hits) std::cout << r.asset_key << "  " << r.display_name << "\n";
      return kOk;
    };
  });

  // export-fixtures
  std::string fixture_dir;
  auto* fixtures = app.add_subcommand("export-fixtures", "Write reference fixtures for other client implementations");
  fixtures->add_option("dir", fixture_dir)->required();
  fixtures->callback([&] {
    action = [&] {
      const fs::path dir(fixture_dir);
      write_file(dir / "compose.json", canonical_dump(compose_fixtures(100)) + "\n");
      std::cout << fixture_dir << "\n";
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(kValidation, "UsageError", e.what());
  }
  return action();
}

}  // namespace

int main(int argc, char** argv) {
  int code = kOk;
  json error;
  try {
    return run(argc, argv);
  } catch (const CliFailure& f) {
    code = f.exit_code;
    error = f.error;
  } catch (const script::ScriptError& e) {
    code = kValidation;
    error = {{"error", "ScriptError"},
             {"message", e.what()},
             {"source", e.source()},
             {"line", e.line()},
             {"column", e.column()}};
  } catch (const script::ScriptValidationError& e) {
    code = kValidation;
    json vs = json::array();
    for (const auto& v : e.violations())
      vs.push_back({{"path", v.violation.path}, {"rule", v.violation.rule}, {"line", v.line}, {"column", v.column}});
    error = {{"error", "InvalidStory"}, {"message", e.what()}, {"violations", vs}};
  } catch (const DecodeError& e) {
    code = kValidation;
    error = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    if (!e.violations().empty()) error["violations"] = violations_json(e.violations());
  } catch (const EncodeError& e) {
    code = kValidation;
    error = {{"error", "InvalidStory"}, {"message", e.what()}, {"violations", violations_json(e.violations())}};
  } catch (const client::ClientError& e) {
    const int s = e.status();
    code = s == 0 ? kIo : s == 404 ? kNotFound : (s >= 400 && s < 500) ? kValidation : kIo;
    error = {{"error", s == 0 ? "NetworkError" : "ServerError"}, {"message", e.what()}, {"status", s}};
    if (s != 0) error["server_body"] = e.body();
  } catch (const InvariantError& e) {
    code = kValidation;
    error = {{"error", "InvalidValue"}, {"message", e.what()}};
  } catch (const fs::filesystem_error& e) {
    code = kIo;
    error = {{"error", "IoError"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = kIo;
    error = {{"error", "Internal"}, {"message", e.what()}};
  }
  error["exit_code"] = code;
  std::cerr << canonical_dump(error) << std::endl;
  return code;
}
