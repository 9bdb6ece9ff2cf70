#include "microar/repository_client.hpp"

#include <httplib.h>

#include "microar/package_format.hpp"

namespace microar::client {

using nlohmann::json;

ClientError::ClientError(int status, std::string body, const std::string& message)
    : std::runtime_error(message), status_(status), body_(std::move(body)) {}

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<ObjectId> id_list(const json& j) {
  std::vector<ObjectId> out;
  for (const auto& v : j) out.push_back(ObjectId::parse(v.get<std::string>()));
  return out;
}

}  // namespace

struct RepositoryClient::Impl {
  httplib::Client http;

  explicit Impl(const std::string& url) : http(url) {
    if (!http.is_valid()) throw ClientError(0, "", "invalid server url: " + url);
    http.set_connection_timeout(5);
    http.set_read_timeout(60);
    http.set_write_timeout(60);
  }

  // Throws unless the response status is one of `ok`.
  static const httplib::Response& check(const httplib::Result& r, std::initializer_list<int> ok) {
    if (!r) throw ClientError(0, "", "request failed: " + httplib::to_string(r.error()));
    for (int s : ok)
      if (r->status == s) return *r;
    throw ClientError(r->status, r->body, "server returned " + std::to_string(r->status) + ": " + r->body);
  }

  json get_json(const std::string& path, const httplib::Params& params = {}) {
    const auto r = http.Get(path, params, httplib::Headers{});
    return json::parse(check(r, {200}).body);
  }
};

RepositoryClient::RepositoryClient(const std::string& base_url) : impl_(std::make_unique<Impl>(base_url)) {}

RepositoryClient::~RepositoryClient() = default;

repo::PublishResult RepositoryClient::publish(const std::string& package, const std::optional<std::string>& creator) {
  httplib::Headers headers;
  if (creator) headers.emplace("creator", *creator);
  const auto r = impl_->http.Post("/stories", headers, package, std::string(kPackageMediaType));
  const auto j = json::parse(Impl::check(r, {200, 201}).body);
  return {StoryId::parse(j.at("story_id").get<std::string>()), j.at("created").get<bool>()};
}

repo::ListingPage RepositoryClient::list(std::int64_t page, std::optional<std::int64_t> page_size,
                                         const std::optional<std::string>& creator) {
  httplib::Params params{{"page", std::to_string(page)}};
  if (page_size) params.emplace("page_size", std::to_string(*page_size));
  if (creator) params.emplace("creator", *creator);
  const auto j = impl_->get_json("/stories", params);
  repo::ListingPage out;
  out.page = j.at("page").get<std::int64_t>();
  out.page_size = j.at("page_size").get<std::int64_t>();
  out.total = j.at("total").get<std::int64_t>();
  out.total_pages = j.at("total_pages").get<std::int64_t>();
  for (const auto& item : j.at("items")) out.items.push_back(repo::listing_from_json(item));
  return out;
}

std::string RepositoryClient::fetch(const StoryId& id) {
  return Impl::check(impl_->http.Get("/stories/" + id.hex()), {200}).body;
}

repo::StoryListing RepositoryClient::meta(const StoryId& id) {
  return repo::listing_from_json(impl_->get_json("/stories/" + id.hex() + "/meta"));
}

std::vector<repo::LineageEntry> RepositoryClient::lineage(const StoryId& id) {
  const auto j = impl_->get_json("/stories/" + id.hex() + "/lineage");
  std::vector<repo::LineageEntry> out;
  for (const auto& e : j.at("chain")) {
    repo::LineageEntry entry{repo::listing_from_json(e), std::nullopt};
    if (const auto& d = e.at("diff_from_parent"); !d.is_null()) entry.diff_from_parent = story_diff_from_json(d);
    out.push_back(std::move(entry));
  }
  return out;
}

json RepositoryClient::stats() { return impl_->get_json("/stats"); }

AssetUpload RepositoryClient::put_asset(const std::string& blob, const std::string& name,
                                        const std::vector<std::string>& tags) {
  httplib::Params params{{"name", name}};
  if (!tags.empty()) params.emplace("tags", join(tags, ','));
  const auto path = httplib::append_query_params("/assets", params);
  const auto r = impl_->http.Post(path, blob, "application/octet-stream");
  const auto j = json::parse(Impl::check(r, {200, 201}).body);
  return {j.at("asset_key").get<std::string>(), j.at("created").get<bool>()};
}

std::string RepositoryClient::get_asset(const std::string& key) {
  return Impl::check(impl_->http.Get("/assets/" + key), {200}).body;
}

std::vector<catalog::AssetRecord> RepositoryClient::search_assets(const std::string& query, int limit) {
  const auto j = impl_->get_json("/assets", {{"q", query}, {"limit", std::to_string(limit)}});
  std::vector<catalog::AssetRecord> out;
  for (const auto& r : j.at("results")) out.push_back(catalog::record_from_json(r));
  return out;
}

remix::CorpusStats corpus_stats_from_json(const json& j) {
  remix::CorpusStats s;
  s.total_stories = j.at("total_stories").get<std::int64_t>();
  s.remix_count = j.at("remix_count").get<std::int64_t>();
  s.self_remix_count = j.at("self_remix_count").get<std::int64_t>();
  s.remix_ratio = j.at("remix_ratio").get<double>();
  s.self_remix_share = j.at("self_remix_share").get<double>();
  const auto& h = j.at("scene_count_histogram");
  s.scene_count_histogram = {h.at("one").get<std::int64_t>(), h.at("two").get<std::int64_t>(),
                             h.at("three_plus").get<std::int64_t>(), h.at("max").get<std::int64_t>()};
  s.unique_assets = j.at("unique_assets").get<std::int64_t>();
  s.total_asset_instances = j.at("total_asset_instances").get<std::int64_t>();
  return s;
}

remix::StoryDiff story_diff_from_json(const json& j) {
  remix::StoryDiff d;
  d.objects_added = id_list(j.at("objects_added"));
  d.objects_removed = id_list(j.at("objects_removed"));
  d.objects_transformed = id_list(j.at("objects_transformed"));
  d.dialogs_edited = id_list(j.at("dialogs_edited"));
  d.scenes_added = j.at("scenes_added").get<int>();
  d.scenes_removed = j.at("scenes_removed").get<int>();
  d.scenes_reordered = j.at("scenes_reordered").get<bool>();
  return d;
}

}  // namespace microar::client
