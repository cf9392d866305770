#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fdsc/entropy.hpp"

namespace fdsc {

// Byte-oriented range coder over 16-bit cumulative frequency rows.
// 64-bit low with carry propagation, 32-bit range renormalized to stay
// >= 2^24. decode(encode(s)) == s exactly for symbols within row support.

class RangeEncoder {
 public:
  void encode(std::uint32_t cum_lo, std::uint32_t cum_hi);
  void encode_symbol(const CdfRow& row, int idx) {
    encode(row.cum[idx], row.cum[idx + 1]);
  }
  // flushes the final state; the encoder must not be reused afterwards
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

struct TruncatedStream : std::runtime_error {
  TruncatedStream() : std::runtime_error("truncated stream") {}
};

class RangeDecoder {
 public:
  RangeDecoder(const std::uint8_t* data, std::size_t size);

  // returns the row index of the decoded symbol
  int decode_symbol(const CdfRow& row);

  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t read_byte() {
    if (pos_ >= size_) throw TruncatedStream();
    return data_[pos_++];
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

}  // namespace fdsc
