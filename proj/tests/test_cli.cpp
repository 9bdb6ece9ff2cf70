#include <doctest.h>

#include <nlohmann/json.hpp>

#include "microar/asset_catalog.hpp"
#include "microar/http_service.hpp"
#include "microar/package_format.hpp"
#include "microar/repository.hpp"
#include "microar/svg_render.hpp"
#include "test_support.hpp"

using namespace microar;
using microar::testing::CommandResult;
using microar::testing::read_file;
using microar::testing::TempDir;
using nlohmann::json;

namespace {

const std::filesystem::path kData = MICROAR_TEST_DATA;

CommandResult cli(std::vector<std::string> args, const std::vector<std::string>& env = {}) {
  args.insert(args.begin(), MICROAR_CLI);
  return microar::testing::run_command(args, env);
}

// The error contract: exactly one JSON line on stderr carrying exit_code.
json error_line(const CommandResult& r) {
  REQUIRE(!r.err.empty());
  CHECK(r.err.back() == '\n');
  CHECK(r.err.find('\n') == r.err.size() - 1);
  auto j = json::parse(r.err);
  CHECK(j["exit_code"] == r.exit_code);
  return j;
}

std::string last_line(const std::string& s) {
  auto t = s;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  return t.substr(t.rfind('\n') == std::string::npos ? 0 : t.rfind('\n') + 1);
}

}  // namespace

TEST_CASE("offline commands") {
  TempDir tmp;
  const auto a = (tmp.path() / "a.mar").string();
  const auto b = (tmp.path() / "b.mar").string();

  SUBCASE("build is deterministic and valid") {
    REQUIRE(cli({"build", (kData / "five_scenes.yaml").string(), "-o", a}).exit_code == 0);
    REQUIRE(cli({"build", (kData / "five_scenes.yaml").string(), "-o", b}).exit_code == 0);
    CHECK(read_file(a) == read_file(b));
    const auto s = decode(read_file(a));
    CHECK(s.scenes.size() == 5);
    CHECK(cli({"validate", a}).exit_code == 0);
    CHECK(cli({"validate", a, "--mode", "publish"}).exit_code == 0);

    const auto info = cli({"inspect", a});
    REQUIRE(info.exit_code == 0);
    const auto j = json::parse(info.out);
    CHECK(j["story_id"] == story_id(s).hex());
    CHECK(j["scenes"].size() == 5);
  }

  SUBCASE("draft packages fail publish validation only") {
    REQUIRE(cli({"build", (kData / "five_scenes.yaml").string(), "-o", a, "--draft"}).exit_code == 0);
    CHECK(cli({"validate", a, "--mode", "draft"}).exit_code == 0);
    const auto r = cli({"validate", a, "--mode", "publish"});
    CHECK(r.exit_code == 1);
    error_line(r);
  }

  SUBCASE("render matches the library renderer") {
    REQUIRE(cli({"build", (kData / "five_scenes.yaml").string(), "-o", a}).exit_code == 0);
    const auto svg = (tmp.path() / "s.svg").string();
    REQUIRE(cli({"render", a, "3", svg}).exit_code == 0);
    catalog::AssetCatalog builtins;
    catalog::install_builtin_assets(builtins);
    CHECK(read_file(svg) == render::render_scene_svg(decode(read_file(a)), 3, builtins.bounds_lookup()));
    const auto bad = cli({"render", a, "5", svg});
    CHECK(bad.exit_code == 3);
    error_line(bad);
  }

  SUBCASE("script errors exit 1 with a location") {
    microar::testing::write_file(tmp.path() / "bad.yaml",
                                 "metadata: {creator: a}\nscenes:\n  - objects:\n      - asset: zebra\n");
    const auto r = cli({"build", (tmp.path() / "bad.yaml").string(), "-o", a});
    CHECK(r.exit_code == 1);
    const auto j = error_line(r);
    CHECK(j["error"] == "ScriptError");
    CHECK(j["line"] == 4);
    CHECK_FALSE(std::filesystem::exists(a));
  }

  SUBCASE("corrupt packages exit 1, missing files exit 2") {
    microar::testing::write_file(a, "PK not really");
    const auto r = cli({"validate", a});
    CHECK(r.exit_code == 1);
    error_line(r);
    const auto missing = cli({"inspect", (tmp.path() / "nope.mar").string()});
    CHECK(missing.exit_code == 2);
    error_line(missing);
  }

  SUBCASE("usage errors exit 1") {
    const auto r = cli({"build"});
    CHECK(r.exit_code == 1);
    CHECK(error_line(r)["error"] == "UsageError");
  }

  SUBCASE("dialogs lists the presets") {
    const auto r = cli({"dialogs"});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Raawr\n") != std::string::npos);
    CHECK(r.out.find("VROOM\n") != std::string::npos);
  }
}

TEST_CASE("repository commands against a live server") {
  TempDir tmp;
  repo::Repository repository(tmp.path() / "repo");
  service::BackgroundServer server(repository);
  const auto url = server.url();
  const auto pkg = (tmp.path() / "five.mar").string();
  REQUIRE(cli({"build", (kData / "five_scenes.yaml").string(), "-o", pkg}).exit_code == 0);
  const auto root_id = story_id(decode(read_file(pkg))).hex();

  const auto first = cli({"--server", url, "publish", pkg});
  REQUIRE(first.exit_code == 0);
  CHECK(first.out == "published\n" + root_id + "\n");
  // MICROAR_SERVER works as well as --server.
  const auto second = cli({"publish", pkg}, {"MICROAR_SERVER=" + url});
  CHECK(second.exit_code == 0);
  CHECK(second.out == "duplicate: already published\n" + root_id + "\n");
  CHECK(repository.size() == 1);

  const auto forged = cli({"--server", url, "publish", pkg, "--creator", "mallory"});
  CHECK(forged.exit_code == 1);
  CHECK(error_line(forged)["status"] == 403);

  // Remix with an edit script: five scenes become six.
  const auto remix = cli({"--server", url, "remix", root_id, "--edits", (kData / "add_cat.yaml").string(), "--creator",
                          "p14", "--created-at", "1700000500", "--publish"});
  REQUIRE(remix.exit_code == 0);
  CHECK(remix.out.rfind("published\n", 0) == 0);
  const auto child_id = last_line(remix.out);

  const auto fetched = (tmp.path() / "child.mar").string();
  REQUIRE(cli({"--server", url, "fetch", child_id, "-o", fetched}).exit_code == 0);
  const auto child = decode(read_file(fetched));
  CHECK(child.scenes.size() == 6);
  CHECK(child.metadata.creator == "p14");
  CHECK(child.metadata.original_creator == "p5");
  CHECK(child.metadata.parent_story->hex() == root_id);

  const auto lin = cli({"--server", url, "lineage", child_id, "--json"});
  REQUIRE(lin.exit_code == 0);
  const auto chain = json::parse(lin.out)["chain"];
  REQUIRE(chain.size() == 2);
  CHECK(chain[0]["story_id"] == root_id);
  CHECK(chain[0]["diff_from_parent"].is_null());
  CHECK(chain[1]["diff_from_parent"]["scenes_added"] == 1);
  CHECK(chain[1]["diff_from_parent"]["dialogs_edited"].size() == 1);

  const auto diff = cli({"diff", pkg, fetched});
  REQUIRE(diff.exit_code == 0);
  CHECK(json::parse(diff.out)["scenes_added"] == 1);

  const auto browse = cli({"--server", url, "browse", "--json", "--page-size", "1"});
  REQUIRE(browse.exit_code == 0);
  const auto page = json::parse(browse.out);
  CHECK(page["total"] == 2);
  CHECK(page["total_pages"] == 2);
  CHECK(page["items"][0]["story_id"] == child_id);

  const auto stats = cli({"--server", url, "stats"});
  REQUIRE(stats.exit_code == 0);
  CHECK(json::parse(stats.out) == remix::to_json(repository.stats()));

  const auto search = cli({"--server", url, "search", "cat", "--remote", "--limit", "2"});
  CHECK(search.exit_code == 0);

  const auto unknown = cli({"--server", url, "fetch", std::string(64, 'e'), "-o", fetched});
  CHECK(unknown.exit_code == 3);
  CHECK(error_line(unknown).contains("server_body"));

  const auto malformed = cli({"--server", url, "fetch", "xyz", "-o", fetched});
  CHECK(malformed.exit_code == 1);
  error_line(malformed);
}

TEST_CASE("seed-corpus publishes the reference corpus once") {
  TempDir tmp;
  repo::Repository repository(tmp.path());
  service::BackgroundServer server(repository);
  const auto first = cli({"--server", server.url(), "seed-corpus"});
  CHECK(first.exit_code == 0);
  CHECK(first.out == "published 194 of 194\n");
  CHECK(cli({"--server", server.url(), "seed-corpus"}).out == "published 0 of 194\n");
  CHECK(repository.stats().remix_count == 48);
}

TEST_CASE("an unreachable server exits 2") {
  const auto r = cli({"--server", "http://127.0.0.1:1", "stats"});
  CHECK(r.exit_code == 2);
  CHECK(error_line(r)["error"] == "NetworkError");
}
