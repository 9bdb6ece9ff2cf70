#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace microar::zip {

// Raw archive bytes. std::string is used as the byte container so buffers
// move between files, HTTP bodies and hashing without copies.
using Bytes = std::string;

struct Entry {
  std::string name;
  Bytes data;
};

class ZipError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes a deterministic archive: entries stored uncompressed, in the given
// order, with zeroed DOS timestamps and no extra fields.
Bytes write_stored(const std::vector<Entry>& entries);

// Reads every entry listed in the central directory. Supports stored and
// deflated entries; verifies CRC-32. Throws ZipError on malformed input.
std::vector<Entry> read(std::string_view archive);

}  // namespace microar::zip
