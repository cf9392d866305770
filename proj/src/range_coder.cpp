#include "fdsc/range_coder.hpp"

#include <algorithm>

namespace fdsc {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_ >> 32) != 0 ||
      static_cast<std::uint32_t>(low_) < 0xFF000000u) {
    std::uint8_t temp = cache_;
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = static_cast<std::uint32_t>(low_) << 8;
}

void RangeEncoder::encode(std::uint32_t cum_lo, std::uint32_t cum_hi) {
  const std::uint32_t r = range_ >> kCdfPrecision;
  low_ += static_cast<std::uint64_t>(r) * cum_lo;
  range_ = r * (cum_hi - cum_lo);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const std::uint8_t* data, std::size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | read_byte();
}

int RangeDecoder::decode_symbol(const CdfRow& row) {
  const std::uint32_t r = range_ >> kCdfPrecision;
  std::uint32_t val = code_ / r;
  val = std::min(val, (1u << kCdfPrecision) - 1);
  // largest idx with cum[idx] <= val
  const auto it = std::upper_bound(row.cum.begin(), row.cum.end(), val);
  const int idx = static_cast<int>(it - row.cum.begin()) - 1;
  code_ -= r * row.cum[idx];
  range_ = r * (row.cum[idx + 1] - row.cum[idx]);
  while (range_ < kTop) {
    code_ = (code_ << 8) | read_byte();
    range_ <<= 8;
  }
  return idx;
}

}  // namespace fdsc
