#include "fdsc/bitstream.hpp"

namespace fdsc {

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t n) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i)
    crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'F', 'D', 'S', 'C'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Cursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;
  std::uint8_t u8() {
    if (pos + 1 > size) throw DecodeError("truncated stream: header");
    return data[pos++];
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
};

}  // namespace

std::size_t Container::serialized_size() const {
  std::size_t sz = kHeaderBytes;
  for (const auto& s : streams) sz += 4 + s.size();
  if (flags & kFlagChecksum) sz += 4;
  return sz;
}

std::vector<std::uint8_t> Container::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(version);
  out.push_back(config_id);
  out.push_back(lambda_idx);
  out.push_back(flags);
  put_u32(out, orig_w);
  put_u32(out, orig_h);
  put_u32(out, padded_w);
  put_u32(out, padded_h);
  for (const auto& s : streams) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  if (flags & kFlagChecksum) put_u32(out, crc32_ieee(out.data(), out.size()));
  return out;
}

Container Container::parse(const std::uint8_t* data, std::size_t size) {
  Cursor c{data, size};
  for (int i = 0; i < 4; ++i)
    if (c.u8() != static_cast<std::uint8_t>(kMagic[i]))
      throw DecodeError("bad magic: not an FDSC container");
  Container out;
  out.version = c.u8();
  if (out.version != kContainerVersion)
    throw DecodeError("unsupported container version " + std::to_string(out.version));
  out.config_id = c.u8();
  out.lambda_idx = c.u8();
  out.flags = c.u8();
  out.orig_w = c.u32();
  out.orig_h = c.u32();
  out.padded_w = c.u32();
  out.padded_h = c.u32();
  for (auto& s : out.streams) {
    const std::uint32_t len = c.u32();
    if (c.pos + len > size) throw DecodeError("truncated stream: substream length");
    s.assign(data + c.pos, data + c.pos + len);
    c.pos += len;
  }
  if (out.flags & kFlagChecksum) {
    const std::size_t body = c.pos;
    const std::uint32_t stored = c.u32();
    if (crc32_ieee(data, body) != stored)
      throw DecodeError("checksum mismatch: corrupted stream");
  }
  if (c.pos != size) throw DecodeError("trailing bytes after container");
  return out;
}

}  // namespace fdsc
