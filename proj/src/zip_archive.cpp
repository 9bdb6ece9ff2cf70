#include "microar/zip_archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <limits>

namespace microar::zip {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::size_t kLocalHeaderSize = 30;
constexpr std::size_t kCentralHeaderSize = 46;
constexpr std::size_t kEndOfCentralDirSize = 22;

void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t crc_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  explicit Reader(std::string_view buf) : buf_(buf) {}

  std::uint16_t u16(std::size_t at) const {
    need(at, 2);
    return static_cast<std::uint16_t>(byte(at) | (byte(at + 1) << 8));
  }
  std::uint32_t u32(std::size_t at) const {
    need(at, 4);
    return static_cast<std::uint32_t>(byte(at)) | (static_cast<std::uint32_t>(byte(at + 1)) << 8) |
           (static_cast<std::uint32_t>(byte(at + 2)) << 16) | (static_cast<std::uint32_t>(byte(at + 3)) << 24);
  }
  std::string_view slice(std::size_t at, std::size_t len) const {
    need(at, len);
    return buf_.substr(at, len);
  }
  std::size_t size() const { return buf_.size(); }

 private:
  unsigned byte(std::size_t at) const { return static_cast<unsigned char>(buf_[at]); }
  void need(std::size_t at, std::size_t len) const {
    if (at > buf_.size() || len > buf_.size() - at) throw ZipError("truncated archive");
  }
  std::string_view buf_;
};

Bytes inflate_raw(std::string_view compressed, std::size_t expected_size) {
  Bytes out(expected_size, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ZipError("inflate init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected_size) throw ZipError("corrupt deflate stream");
  return out;
}

}  // namespace

Bytes write_stored(const std::vector<Entry>& entries) {
  constexpr auto kMax32 = std::numeric_limits<std::uint32_t>::max();
  if (entries.size() > std::numeric_limits<std::uint16_t>::max()) throw ZipError("too many entries");
  Bytes out;
  Bytes central;
  for (const auto& e : entries) {
    if (e.data.size() >= kMax32 || out.size() >= kMax32) throw ZipError("archive too large");
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) throw ZipError("entry name too long");
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto crc = crc_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto name_len = static_cast<std::uint16_t>(e.name.size());

    put32(out, kLocalHeaderSig);
    put16(out, kVersion);
    put16(out, 0);  // flags
    put16(out, 0);  // method: stored
    put16(out, 0);  // mod time
    put16(out, 0);  // mod date
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);  // extra length
    out += e.name;
    out += e.data;

    put32(central, kCentralHeaderSig);
    put16(central, kVersion);  // made by
    put16(central, kVersion);  // needed
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk start
    put16(central, 0);  // internal attributes
    put32(central, 0);  // external attributes
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  const auto cd_size = static_cast<std::uint32_t>(central.size());
  out += central;
  put32(out, kEndOfCentralDirSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, cd_size);
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read(std::string_view archive) {
  Reader r(archive);
  if (r.size() < kEndOfCentralDirSize) throw ZipError("not a zip archive");

  // The end record sits at the tail, possibly followed by a comment.
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = r.size() > kEndOfCentralDirSize + 0xffff ? r.size() - kEndOfCentralDirSize - 0xffff : 0;
  for (std::size_t at = r.size() - kEndOfCentralDirSize + 1; at-- > lowest;) {
    if (r.u32(at) == kEndOfCentralDirSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw ZipError("end of central directory not found");

  const std::uint16_t count = r.u16(eocd + 10);
  const std::uint32_t cd_offset = r.u32(eocd + 16);

  std::vector<Entry> entries;
  entries.reserve(count);
  std::size_t at = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (r.u32(at) != kCentralHeaderSig) throw ZipError("bad central directory header");
    const std::uint16_t flags = r.u16(at + 8);
    const std::uint16_t method = r.u16(at + 10);
    const std::uint32_t crc = r.u32(at + 16);
    const std::uint32_t csize = r.u32(at + 20);
    const std::uint32_t usize = r.u32(at + 24);
    const std::uint16_t name_len = r.u16(at + 28);
    const std::uint16_t extra_len = r.u16(at + 30);
    const std::uint16_t comment_len = r.u16(at + 32);
    const std::uint32_t local = r.u32(at + 42);
    std::string name(r.slice(at + kCentralHeaderSize, name_len));
    at += kCentralHeaderSize + name_len + extra_len + comment_len;

    if (flags & 0x1) throw ZipError("encrypted entries are not supported: " + name);
    if (csize == 0xffffffffu || usize == 0xffffffffu || local == 0xffffffffu) {
      throw ZipError("zip64 entries are not supported: " + name);
    }
    if (r.u32(local) != kLocalHeaderSig) throw ZipError("bad local header for " + name);
    const std::size_t data_at = local + kLocalHeaderSize + r.u16(local + 26) + r.u16(local + 28);
    const auto raw = r.slice(data_at, csize);

    Bytes data;
    if (method == 0) {
      if (csize != usize) throw ZipError("stored entry size mismatch: " + name);
      data.assign(raw);
    } else if (method == 8) {
      data = inflate_raw(raw, usize);
    } else {
      throw ZipError("unsupported compression method for " + name);
    }
    if (crc_of(data) != crc) throw ZipError("CRC mismatch for " + name);
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

}  // namespace microar::zip
