#include "fdsc/quant.hpp"

#include <cmath>

namespace fdsc {

template <typename T>
DeltaHead<T>::DeltaHead(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                        int psi_channels, int band_channels) {
  const int hidden = std::max(psi_channels / 2, band_channels);
  c1 = make_conv(ps, prefix + ".c1", rng, psi_channels, hidden, 1, 1, 0);
  c2 = make_conv(ps, prefix + ".c2", rng, hidden, band_channels, 1, 1, 0);
  // keep t near zero at init so delta starts at ~1 (exactly 1 for zero input)
  for (std::int64_t i = 0; i < c2.w->val.numel(); ++i) c2.w->val[i] *= T(0.1);
}

template <typename T>
ag::Var<T> DeltaHead<T>::forward(const ag::Var<T>& psi) const {
  auto t = c2(ag::leaky_relu(c1(psi), static_cast<T>(kLReluSlope)));
  t = ag::lower_bound(t, static_cast<T>(std::log(kDeltaMin)));
  t = ag::upper_bound(t, static_cast<T>(std::log(kDeltaMax)));
  return ag::exp_v(t);
}

template <typename T>
void quantize_test(const Tensor<T>& y, const Tensor<T>& delta,
                   Tensor<std::int32_t>& k, Tensor<T>& y_hat) {
  check(y.same_shape(delta), "quantize_test: shape mismatch");
  k.reset(y.dims());
  y_hat.reset(y.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) {
    const double d = static_cast<double>(delta[i]);
    const std::int64_t q = std::llround(static_cast<double>(y[i]) / d);
    k[i] = static_cast<std::int32_t>(q);
    y_hat[i] = static_cast<T>(d * static_cast<double>(q));
  }
}

template <typename T>
void round_unit(const Tensor<T>& z, Tensor<std::int32_t>& k, Tensor<T>& z_hat) {
  k.reset(z.dims());
  z_hat.reset(z.dims());
  for (std::int64_t i = 0; i < z.numel(); ++i) {
    const std::int64_t q = std::llround(static_cast<double>(z[i]));
    k[i] = static_cast<std::int32_t>(q);
    z_hat[i] = static_cast<T>(q);
  }
}

#define FDSC_INSTANTIATE(T)                                             \
  template struct DeltaHead<T>;                                         \
  template void quantize_test<T>(const Tensor<T>&, const Tensor<T>&,    \
                                 Tensor<std::int32_t>&, Tensor<T>&);    \
  template void round_unit<T>(const Tensor<T>&, Tensor<std::int32_t>&, \
                              Tensor<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
