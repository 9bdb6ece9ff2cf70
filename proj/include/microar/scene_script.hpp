#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "microar/asset_catalog.hpp"
#include "microar/core_model.hpp"

namespace microar::script {

// Failure located in a script; line and column are 1-based, 0 when unknown.
class ScriptError : public std::runtime_error {
 public:
  ScriptError(std::string source, int line, int column, std::string message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::string source_;
  int line_;
  int column_;
  std::string message_;
};

// Validation failure after a script compiled; each violation is paired with
// the script location it came from.
class ScriptValidationError : public std::runtime_error {
 public:
  struct Located {
    Violation violation;
    int line = 0;
    int column = 0;
  };

  ScriptValidationError(std::string source, std::vector<Located> violations);
  const std::vector<Located>& violations() const { return violations_; }

 private:
  std::vector<Located> violations_;
};

// Stock balloon texts offered to authors. Scripts may pick one with
// `dialog: {preset: "VROOM"}`.
const std::vector<std::string>& preset_dialogs();

// Deterministic id: the first 128 bits of SHA-256 over the joined parts.
template <typename Id>
Id derived_id(std::string_view salt, std::string_view kind, std::string_view label);

// Compiles a scene script (YAML, or JSON as a YAML subset) into a draft-valid
// story. Asset queries resolve to the catalog's top search hit.
Story compile_script(std::string_view text, const catalog::AssetCatalog& catalog,
                     const std::string& source_name = "<script>");

Story load_script(const std::filesystem::path& path, const catalog::AssetCatalog& catalog);

// Applies an edit script to a derived remix draft. `salt` (normally the
// parent's story id) keeps ids of added scenes and objects distinct across
// remixes of different parents.
Story apply_edits(Story draft, std::string_view text, const catalog::AssetCatalog& catalog, std::string_view salt,
                  const std::string& source_name = "<edits>");

}  // namespace microar::script
