#pragma once

#include "fdsc/autoencoder.hpp"
#include "fdsc/bitstream.hpp"
#include "fdsc/range_coder.hpp"

namespace fdsc {

// Outcome of the staged quantization/coding pipeline. Symbols are stored in
// coding order: per band, channel-major raster scan, anchors before
// non-anchors (documented in docs/bitstream.md).
template <typename T>
struct CodedLatents {
  FreqTriple<T> y_hat, z_hat;
  std::array<std::vector<std::int32_t>, 6> symbols;  // z H,M,L then y H,M,L
  std::array<double, 3> y_bits{};  // continuous-model rate estimates
  std::array<double, 3> z_bits{};
  std::array<double, 3> mean_delta{1.0, 1.0, 1.0};

  double total_bits() const {
    double t = 0;
    for (int b = 0; b < 3; ++b) t += y_bits[b] + z_bits[b];
    return t;
  }
};

template <typename T>
struct EncodeResult {
  Container container;
  CodedLatents<T> latents;
  Tensor<T> reconstruction;  // cropped; empty unless requested
};

template <typename T>
EncodeResult<T> encode_image(const Model<T>& model, const Tensor<T>& img,
                             bool with_reconstruction = false);

template <typename T>
Tensor<T> decode_image(const Model<T>& model, const Container& container);

// Same quantized pipeline as encode/decode but without serialization; used
// as the reference the codec round-trip is compared against.
template <typename T>
struct DirectResult {
  CodedLatents<T> latents;
  Tensor<T> reconstruction;  // cropped
};

template <typename T>
DirectResult<T> direct_forward(const Model<T>& model, const Tensor<T>& img);

}  // namespace fdsc
