#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fdsc/tensor.hpp"

namespace fdsc {

// Normative byte layout (all integers big-endian):
//   magic "FDSC" | version u8 | config-id u8 | lambda-index u8 | flags u8 |
//   orig_w u32 | orig_h u32 | padded_w u32 | padded_h u32 |
//   6 x { length u32 | payload } in order z^H z^M z^L y^H y^M y^L
//   [ crc32 u32 when flags bit 0 is set ]
// Header is 24 bytes. Documented with a hex example in docs/bitstream.md.

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::uint8_t kFlagChecksum = 0x01;
inline constexpr int kHeaderBytes = 24;

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t n);

struct Container {
  std::uint8_t version = kContainerVersion;
  std::uint8_t config_id = 0;
  std::uint8_t lambda_idx = 0xFF;
  std::uint8_t flags = kFlagChecksum;
  std::uint32_t orig_w = 0, orig_h = 0;
  std::uint32_t padded_w = 0, padded_h = 0;
  std::array<std::vector<std::uint8_t>, 6> streams;  // z H,M,L then y H,M,L

  std::size_t serialized_size() const;
  std::vector<std::uint8_t> serialize() const;
  // throws std::runtime_error on bad magic/version, truncation, trailing
  // bytes, or checksum failure
  static Container parse(const std::uint8_t* data, std::size_t size);
};

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fdsc
