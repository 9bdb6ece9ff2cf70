#include "microar/repository.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <map>
#include <sstream>
#include <system_error>

#include "microar/digest.hpp"
#include "microar/package_format.hpp"

namespace microar::repo {

namespace fs = std::filesystem;
using nlohmann::json;

RepositoryError::RepositoryError(int status, std::string code, const std::string& message,
                                 std::vector<Violation> violations)
    : std::runtime_error(message), status_(status), code_(std::move(code)), violations_(std::move(violations)) {}

json RepositoryError::to_json() const {
  json j = {{"error", code_}, {"message", what()}};
  if (!violations_.empty()) {
    json vs = json::array();
    for (const auto& v : violations_) vs.push_back({{"path", v.path}, {"rule", v.rule}});
    j["violations"] = std::move(vs);
  }
  return j;
}

struct Repository::Entry {
  StoryListing listing;  // view_count unused; see views
  Story story;
  std::shared_ptr<std::atomic<std::int64_t>> views;

  StoryListing current() const {
    auto l = listing;
    l.view_count = views->load();
    return l;
  }
};

struct Repository::Index {
  std::map<StoryId, std::shared_ptr<const Entry>> by_id;
  // created_at desc, then story_id asc.
  std::vector<std::shared_ptr<const Entry>> ordered;
};

namespace {

bool listing_before(const StoryListing& a, const StoryListing& b) {
  if (a.created_at != b.created_at) return a.created_at > b.created_at;
  return a.story_id < b.story_id;
}

StoryListing make_listing(const StoryId& id, const Story& s) {
  StoryListing l{id, {}, {}, {}, {}, 0, 0, std::nullopt, 0};
  l.title = s.metadata.title;
  l.creator = s.metadata.creator;
  l.original_creator = s.metadata.original_creator;
  l.description = s.metadata.description;
  l.scene_count = static_cast<std::int64_t>(s.scenes.size());
  l.created_at = s.metadata.created_at;
  l.parent_story = s.metadata.parent_story;
  return l;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Durable write: temp file, fsync, rename.
void write_file_durably(const fs::path& target, std::string_view bytes) {
  fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "open " + tmp.string());
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw std::system_error(err, std::generic_category(), "write " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, target);
}

}  // namespace

Repository::Repository(fs::path root, std::int64_t page_size_cap)
    : root_(std::move(root)), page_size_cap_(page_size_cap), assets_(root_ / "assets"),
      index_(std::make_shared<Index>()) {
  if (page_size_cap_ < 1) throw std::invalid_argument("page size cap must be positive");
  fs::create_directories(root_ / "packages");
  replay();
  journal_.open(root_ / "journal.log", std::ios::binary | std::ios::app);
  if (!journal_) throw std::runtime_error("cannot open journal in " + root_.string());
}

Repository::~Repository() = default;

std::shared_ptr<const Repository::Index> Repository::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return index_;
}

fs::path Repository::package_path(const StoryId& id) const {
  return root_ / "packages" / id.hex().substr(0, 2) / (id.hex() + std::string(kPackageExtension));
}

void Repository::replay() {
  const auto path = root_ / "journal.log";
  if (!fs::exists(path)) return;
  const std::string log = read_file(path);
  // Drop a torn tail so the next append starts on a fresh line.
  const auto complete = log.rfind('\n') == std::string::npos ? 0 : log.rfind('\n') + 1;
  if (complete != log.size()) fs::resize_file(path, complete);

  auto index = std::make_shared<Index>();
  std::istringstream in(log.substr(0, complete));
  std::string line;
  while (std::getline(in, line)) {
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error&) {
      continue;
    }
    if (!event.is_object() || !event.contains("story_id")) continue;
    const auto id = StoryId::parse(event["story_id"].get<std::string>());
    const auto type = event.value("event", "");
    if (type == "publish") {
      if (index->by_id.count(id)) continue;
      auto story = decode(read_file(package_path(id)));
      auto entry = std::make_shared<Entry>(
          Entry{make_listing(id, story), std::move(story), std::make_shared<std::atomic<std::int64_t>>(0)});
      index->by_id.emplace(id, entry);
      index->ordered.push_back(entry);
    } else if (type == "view") {
      if (auto it = index->by_id.find(id); it != index->by_id.end()) it->second->views->fetch_add(1);
    }
  }
  std::sort(index->ordered.begin(), index->ordered.end(),
            [](const auto& a, const auto& b) { return listing_before(a->listing, b->listing); });
  std::lock_guard lock(snapshot_mutex_);
  index_ = std::move(index);
}

void Repository::append_journal(const json& event) {
  const auto line = canonical_dump(event) + "\n";
  std::lock_guard lock(journal_mutex_);
  journal_.write(line.data(), static_cast<std::streamsize>(line.size()));
  journal_.flush();
  if (!journal_) throw std::runtime_error("journal write failed");
}

PublishResult Repository::publish(std::string_view package, const std::optional<std::string>& creator) {
  DecodedPackage decoded;
  try {
    decoded = decode_package(package);
  } catch (const DecodeError& e) {
    throw RepositoryError(422, std::string(to_string(e.kind())), e.what(), e.violations());
  }
  if (decoded.kind == PackageKind::kDraft)
    throw RepositoryError(422, "DraftPackage", "draft packages cannot be published");
  Story& story = decoded.story;
  if (auto vs = validate_story(story, ValidationMode::kPublish); !vs.empty())
    throw RepositoryError(422, "InvalidStory", describe(vs), std::move(vs));
  if (creator && *creator != story.metadata.creator)
    throw RepositoryError(403, "CreatorMismatch", "creator header does not match the package creator");

  const std::string canonical = encode(story);
  const auto id = StoryId::from_digest(sha256(canonical));

  std::lock_guard write_lock(write_mutex_);
  const auto current = snapshot();
  if (current->by_id.count(id)) return {id, false};

  if (const auto& parent_id = story.metadata.parent_story) {
    const auto it = current->by_id.find(*parent_id);
    if (it == current->by_id.end())
      throw RepositoryError(409, "BrokenLineage", "parent story " + parent_id->hex() + " is not published");
    const auto& parent = it->second->story.metadata;
    std::vector<Violation> vs;
    if (story.metadata.parent_creator != parent.creator)
      vs.push_back({"metadata.parent_creator", "must equal the parent's creator"});
    if (story.metadata.original_creator != parent.original_creator)
      vs.push_back({"metadata.original_creator", "must equal the parent's original creator"});
    if (!vs.empty()) throw RepositoryError(422, "InvalidLineage", describe(vs), std::move(vs));
  }

  write_file_durably(package_path(id), canonical);
  append_journal({{"event", "publish"}, {"story_id", id.hex()}});

  auto entry = std::make_shared<Entry>(
      Entry{make_listing(id, story), std::move(story), std::make_shared<std::atomic<std::int64_t>>(0)});
  auto next = std::make_shared<Index>(*current);
  next->by_id.emplace(id, entry);
  const auto pos = std::lower_bound(next->ordered.begin(), next->ordered.end(), entry,
                                    [](const auto& a, const auto& b) { return listing_before(a->listing, b->listing); });
  next->ordered.insert(pos, entry);
  {
    std::lock_guard lock(snapshot_mutex_);
    index_ = std::move(next);
  }
  return {id, true};
}

ListingPage Repository::list(std::int64_t page, std::int64_t page_size, const std::optional<std::string>& creator) const {
  if (page < 1) throw RepositoryError(400, "BadRequest", "page must be >= 1");
  if (page_size < 1 || page_size > page_size_cap_)
    throw RepositoryError(400, "BadRequest", "page_size must be in [1, " + std::to_string(page_size_cap_) + "]");
  const auto current = snapshot();
  ListingPage out;
  out.page = page;
  out.page_size = page_size;
  const std::int64_t first = (page - 1) * page_size;
  for (const auto& e : current->ordered) {
    if (creator && e->listing.creator != *creator) continue;
    if (out.total >= first && out.total < first + page_size) out.items.push_back(e->current());
    ++out.total;
  }
  out.total_pages = (out.total + page_size - 1) / page_size;
  return out;
}

std::string Repository::fetch(const StoryId& id) {
  const auto current = snapshot();
  const auto it = current->by_id.find(id);
  if (it == current->by_id.end()) throw RepositoryError(404, "NotFound", "unknown story " + id.hex());
  auto bytes = read_file(package_path(id));
  it->second->views->fetch_add(1);
  append_journal({{"event", "view"}, {"story_id", id.hex()}});
  return bytes;
}

StoryListing Repository::meta(const StoryId& id) const {
  const auto current = snapshot();
  const auto it = current->by_id.find(id);
  if (it == current->by_id.end()) throw RepositoryError(404, "NotFound", "unknown story " + id.hex());
  return it->second->current();
}

std::vector<LineageEntry> Repository::lineage(const StoryId& id) const {
  const auto current = snapshot();
  if (!current->by_id.count(id)) throw RepositoryError(404, "NotFound", "unknown story " + id.hex());
  const remix::StoryLookup lookup = [&current](const StoryId& sid) -> std::optional<Story> {
    const auto it = current->by_id.find(sid);
    if (it == current->by_id.end()) return std::nullopt;
    return it->second->story;
  };
  std::vector<std::pair<StoryId, Story>> chain;
  try {
    chain = remix::lineage(lookup, id);
  } catch (const remix::LineageError& e) {
    throw RepositoryError(500, e.kind() == remix::LineageErrorKind::kBrokenLineage ? "BrokenLineage" : "CyclicLineage",
                          e.what());
  }
  std::vector<LineageEntry> out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    LineageEntry e{current->by_id.at(chain[i].first)->current(), std::nullopt};
    if (i > 0) e.diff_from_parent = remix::diff(chain[i - 1].second, chain[i].second);
    out.push_back(std::move(e));
  }
  return out;
}

remix::CorpusStats Repository::stats() const {
  const auto current = snapshot();
  std::vector<Story> stories;
  stories.reserve(current->ordered.size());
  for (const auto& e : current->ordered) stories.push_back(e->story);
  return remix::corpus_stats(stories);
}

std::size_t Repository::size() const { return snapshot()->by_id.size(); }

}  // namespace microar::repo
