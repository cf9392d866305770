#pragma once

#include "fdsc/freq_blocks.hpp"

namespace fdsc {

inline constexpr double kDeltaMin = 0.05;
inline constexpr double kDeltaMax = 4.0;

// Per-band quantization-step predictor: two 1x1 conv layers over the
// hyperprior features, output bounded to [kDeltaMin, kDeltaMax] through
// exp(clamp(t, ln dmin, ln dmax)). Zero input yields t = 0, i.e. delta = 1.
template <typename T>
struct DeltaHead {
  Conv<T> c1, c2;

  DeltaHead() = default;
  DeltaHead(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int psi_channels,
            int band_channels);

  ag::Var<T> forward(const ag::Var<T>& psi) const;
};

// test-time quantization: k = round-half-away-from-zero(y / delta),
// y_hat = delta * k
template <typename T>
void quantize_test(const Tensor<T>& y, const Tensor<T>& delta,
                   Tensor<std::int32_t>& k, Tensor<T>& y_hat);

// unit-step rounding used for hyper latents
template <typename T>
void round_unit(const Tensor<T>& z, Tensor<std::int32_t>& k, Tensor<T>& z_hat);

}  // namespace fdsc
