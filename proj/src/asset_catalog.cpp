#include "microar/asset_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <system_error>

#include "microar/digest.hpp"
#include "microar/package_format.hpp"

namespace microar::catalog {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kUm = 1e6;

std::int64_t to_um(double m) { return static_cast<std::int64_t>(std::nearbyint(m * kUm)); }
double from_um(std::int64_t v) { return static_cast<double>(v) / kUm; }

Vec3 snap(const Vec3& v) { return {from_um(to_um(v.x)), from_um(to_um(v.y)), from_um(to_um(v.z))}; }

bool valid_bounds(const layout::Aabb& b) {
  const auto ok = [](double v) { return std::isfinite(v); };
  return ok(b.min.x) && ok(b.min.y) && ok(b.min.z) && ok(b.max.x) && ok(b.max.y) && ok(b.max.z) &&
         b.min.x <= b.max.x && b.min.y <= b.max.y && b.min.z <= b.max.z;
}

fs::path blob_path(const fs::path& root, const std::string& key) {
  return root / "blobs" / key.substr(0, 2) / key;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& p, std::string_view data) {
  fs::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

json vec_json(const Vec3& v) { return json::array({to_um(v.x), to_um(v.y), to_um(v.z)}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("bounds corner must have 3 integers");
  return {from_um(j.at(0).get<std::int64_t>()), from_um(j.at(1).get<std::int64_t>()),
          from_um(j.at(2).get<std::int64_t>())};
}

}  // namespace

json to_json(const AssetRecord& r) {
  return {{"asset_key", r.asset_key},
          {"display_name", r.display_name},
          {"tags", r.tags},
          {"blob_size", r.blob_size},
          {"bounds", {{"min_um", vec_json(r.bounds.min)}, {"max_um", vec_json(r.bounds.max)}}}};
}

AssetRecord record_from_json(const json& j) {
  AssetRecord r;
  r.asset_key = j.at("asset_key").get<std::string>();
  r.display_name = j.at("display_name").get<std::string>();
  r.tags = j.at("tags").get<std::vector<std::string>>();
  r.blob_size = j.at("blob_size").get<std::uint64_t>();
  r.bounds.min = vec_from(j.at("bounds").at("min_um"));
  r.bounds.max = vec_from(j.at("bounds").at("max_um"));
  return r;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

AssetCatalog::AssetCatalog() = default;

AssetCatalog::AssetCatalog(fs::path root) : root_(std::move(root)) {
  fs::create_directories(*root_ / "blobs");
  replay();
  journal_.open(*root_ / "index.log", std::ios::binary | std::ios::app);
  if (!journal_) throw std::system_error(errno, std::generic_category(), "cannot open asset index journal");
}

void AssetCatalog::replay() {
  const auto path = *root_ / "index.log";
  if (!fs::exists(path)) return;
  std::string log;
  {
    std::ifstream file(path, std::ios::binary);
    log.assign(std::istreambuf_iterator<char>(file), {});
  }
  // Drop a torn tail so the next append starts on a fresh line.
  const auto last = log.rfind('\n');
  const std::size_t complete = last == std::string::npos ? 0 : last + 1;
  if (complete != log.size()) fs::resize_file(path, complete);

  std::istringstream in(log.substr(0, complete));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AssetRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const std::exception&) {
      continue;
    }
    if (!fs::exists(blob_path(*root_, r.asset_key))) continue;
    records_.emplace(r.asset_key, std::move(r));
  }
}

std::string AssetCatalog::put_asset(std::string_view blob, const std::string& display_name,
                                    std::vector<std::string> tags, const layout::Aabb& bounds) {
  if (blob.empty()) throw std::invalid_argument("asset blob must be non-empty");
  if (display_name.empty()) throw std::invalid_argument("asset display name must be non-empty");
  if (!valid_bounds(bounds)) throw std::invalid_argument("asset bounds must be finite with min <= max");

  const auto key = to_hex(sha256(blob));
  std::unique_lock lock(mutex_);
  if (records_.count(key)) return key;

  AssetRecord r;
  r.asset_key = key;
  r.display_name = display_name;
  for (auto& t : tags) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  r.tags = std::move(tags);
  r.blob_size = blob.size();
  r.bounds = {snap(bounds.min), snap(bounds.max)};

  if (root_) {
    write_file_atomic(blob_path(*root_, key), blob);
    journal_ << canonical_dump(to_json(r)) << '\n';
    journal_.flush();
    if (!journal_) throw std::system_error(errno, std::generic_category(), "cannot append to asset index journal");
  } else {
    memory_blobs_.emplace(key, std::string(blob));
  }
  records_.emplace(key, std::move(r));
  return key;
}

std::string AssetCatalog::get_asset(const std::string& key) const {
  std::string blob;
  {
    std::shared_lock lock(mutex_);
    if (!records_.count(key)) throw NotFound(key);
    if (root_) {
      blob = read_file(blob_path(*root_, key));
    } else {
      blob = memory_blobs_.at(key);
    }
  }
  if (to_hex(sha256(blob)) != key) throw IntegrityError("stored blob does not match its key: " + key);
  return blob;
}

std::optional<AssetRecord> AssetCatalog::find(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<AssetRecord> AssetCatalog::search(std::string_view query, int limit) const {
  if (limit <= 0) throw std::invalid_argument("search limit must be positive");
  const auto q = tokenize(query);
  const std::set<std::string> wanted(q.begin(), q.end());
  if (wanted.empty()) return {};

  std::vector<std::pair<std::size_t, const AssetRecord*>> hits;
  std::shared_lock lock(mutex_);
  for (const auto& [key, r] : records_) {
    std::set<std::string> doc;
    for (auto& t : tokenize(r.display_name)) doc.insert(std::move(t));
    for (const auto& tag : r.tags) {
      for (auto& t : tokenize(tag)) doc.insert(std::move(t));
    }
    const auto matched = static_cast<std::size_t>(
        std::count_if(wanted.begin(), wanted.end(), [&](const std::string& t) { return doc.count(t) > 0; }));
    if (matched > 0) hits.emplace_back(matched, &r);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->display_name != b.second->display_name) return a.second->display_name < b.second->display_name;
    return a.second->asset_key < b.second->asset_key;
  });
  std::vector<AssetRecord> out;
  for (std::size_t i = 0; i < hits.size() && out.size() < static_cast<std::size_t>(limit); ++i) {
    out.push_back(*hits[i].second);
  }
  return out;
}

std::size_t AssetCatalog::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<AssetRecord> AssetCatalog::records() const {
  std::shared_lock lock(mutex_);
  std::vector<AssetRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, r] : records_) out.push_back(r);
  return out;
}

layout::BoundsLookup AssetCatalog::bounds_lookup() const {
  return [this](const AssetRef& ref) {
    auto r = find(ref.asset_key);
    return r ? r->bounds : layout::kUnitCube;
  };
}

const std::vector<BuiltinAsset>& builtin_assets() {
  // Rough real-world sizes, origin at the base center.
  static const std::vector<BuiltinAsset> kAssets = {
      {"person", {"human", "character"}, {{-0.25, 0.0, -0.15}, {0.25, 1.75, 0.15}}},
      {"old man", {"human", "elderly", "character"}, {{-0.25, 0.0, -0.15}, {0.25, 1.7, 0.15}}},
      {"girl", {"human", "child", "character"}, {{-0.2, 0.0, -0.12}, {0.2, 1.3, 0.12}}},
      {"astronaut", {"human", "space", "character"}, {{-0.35, 0.0, -0.25}, {0.35, 1.85, 0.25}}},
      {"drummer", {"human", "music", "character"}, {{-0.6, 0.0, -0.5}, {0.6, 1.4, 0.5}}},
      {"bee", {"insect", "animal"}, {{-0.02, 0.0, -0.02}, {0.02, 0.03, 0.02}}},
      {"penguin", {"bird", "animal"}, {{-0.2, 0.0, -0.2}, {0.2, 0.7, 0.2}}},
      {"cat", {"animal", "pet"}, {{-0.12, 0.0, -0.25}, {0.12, 0.3, 0.25}}},
      {"robot cat", {"robot", "animal", "pet"}, {{-0.15, 0.0, -0.3}, {0.15, 0.35, 0.3}}},
      {"dog", {"animal", "pet"}, {{-0.15, 0.0, -0.4}, {0.15, 0.5, 0.4}}},
      {"lamb", {"sheep", "animal"}, {{-0.2, 0.0, -0.4}, {0.2, 0.6, 0.4}}},
      {"horse", {"animal"}, {{-0.3, 0.0, -1.0}, {0.3, 1.6, 1.0}}},
      {"piano", {"music", "instrument"}, {{-0.75, 0.0, -0.3}, {0.75, 1.0, 0.3}}},
      {"guitar", {"music", "instrument"}, {{-0.2, 0.0, -0.05}, {0.2, 1.0, 0.05}}},
      {"drum", {"music", "instrument"}, {{-0.25, 0.0, -0.25}, {0.25, 0.4, 0.25}}},
      {"rocket", {"space", "vehicle"}, {{-0.5, 0.0, -0.5}, {0.5, 4.0, 0.5}}},
      {"planet", {"space"}, {{-0.5, 0.0, -0.5}, {0.5, 1.0, 0.5}}},
      {"moon", {"space"}, {{-0.3, 0.0, -0.3}, {0.3, 0.6, 0.3}}},
      {"car", {"vehicle"}, {{-0.9, 0.0, -2.2}, {0.9, 1.5, 2.2}}},
      {"tree", {"plant", "nature"}, {{-1.0, 0.0, -1.0}, {1.0, 4.0, 1.0}}},
      {"house", {"building"}, {{-4.0, 0.0, -5.0}, {4.0, 6.0, 5.0}}},
      {"windmill", {"building"}, {{-2.0, 0.0, -2.0}, {2.0, 10.0, 2.0}}},
      {"virus", {"covid", "germ"}, {{-0.05, 0.0, -0.05}, {0.05, 0.1, 0.05}}},
      {"face mask", {"covid", "mask"}, {{-0.09, 0.0, -0.03}, {0.09, 0.12, 0.03}}},
      {"rubber duck", {"bath", "toy"}, {{-0.05, 0.0, -0.06}, {0.05, 0.09, 0.06}}},
  };
  return kAssets;
}

std::string builtin_blob(std::string_view name) { return "microar-placeholder-v1:" + std::string(name); }

void install_builtin_assets(AssetCatalog& catalog) {
  for (const auto& a : builtin_assets()) catalog.put_asset(builtin_blob(a.name), std::string(a.name), a.tags, a.bounds);
}

std::vector<std::string> prefetch_plan(const Story& story) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& scene : story.scenes) {
    for (const auto& obj : scene.objects) {
      if (seen.insert(obj.asset.asset_key).second) out.push_back(obj.asset.asset_key);
    }
  }
  return out;
}

}  // namespace microar::catalog
