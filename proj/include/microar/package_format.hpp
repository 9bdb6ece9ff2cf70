#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "microar/core_model.hpp"
#include "microar/zip_archive.hpp"

namespace microar {

using Bytes = zip::Bytes;

inline constexpr std::string_view kMetadataPart = "metadata.json";
inline constexpr std::string_view kContentPart = "content.json";
inline constexpr std::string_view kLayoutPart = "layout.json";
inline constexpr std::string_view kPackageExtension = ".mar";
inline constexpr std::string_view kPackageMediaType = "application/vnd.microar+zip";

enum class DecodeErrorKind {
  kMalformedArchive,
  kMissingPart,
  kMalformedJson,
  kMissingVersion,
  kUnsupportedMajor,
  kInvalidStory,
};

std::string_view to_string(DecodeErrorKind kind);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& message, std::vector<Violation> violations = {});

  DecodeErrorKind kind() const { return kind_; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  DecodeErrorKind kind_;
  std::vector<Violation> violations_;
};

// Raised by encode when the story is not draft-valid.
class EncodeError : public std::invalid_argument {
 public:
  explicit EncodeError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// Canonical JSON text: keys sorted, no insignificant whitespace, UTF-8 kept as-is.
std::string canonical_dump(const nlohmann::json& value);

enum class PackageKind { kPublished, kDraft };

struct DecodedPackage {
  Story story;
  PackageKind kind = PackageKind::kPublished;
};

// The three canonical parts of a package, before archiving.
struct PackageParts {
  std::string metadata;
  std::string content;
  std::string layout;
};

PackageParts encode_parts(const Story& story, PackageKind kind = PackageKind::kPublished);
Bytes encode(const Story& story, PackageKind kind = PackageKind::kPublished);

DecodedPackage decode_package(std::string_view bytes);
Story decode(std::string_view bytes);

// SHA-256 of the canonical published encoding.
StoryId story_id(const Story& story);

// Returns the declared (major, minor) version; accepts any minor under major 1.
FormatVersion check_version(std::string_view bytes);

// Part-level helpers, exposed for tooling and tests.
nlohmann::json metadata_to_json(const Metadata& metadata, PackageKind kind);
Story story_from_parts(const nlohmann::json& metadata, const nlohmann::json& content, const nlohmann::json& layout,
                       PackageKind* kind_out = nullptr);

}  // namespace microar
