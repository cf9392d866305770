#include "fdsc/kernels.hpp"

// Naive serial references. Same arithmetic order per output element as the
// parallel kernels, so comparisons can be exact.

namespace fdsc::kernels::ref {

template <typename T>
void conv2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
            Tensor<T>& y) {
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  const int ho = conv_out_dim(hi, k, s, p), wo = conv_out_dim(wi, k, s, p);
  y.reset({co, ho, wo});
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        T acc = bias ? bias[oc] : T(0);
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s - p + ky, ix = ox * s - p + kx;
              if (iy < 0 || iy >= hi || ix < 0 || ix >= wi) continue;
              acc += x.at(ic, iy, ix) * w[((static_cast<std::int64_t>(oc) * ci + ic) * k + ky) * k + kx];
            }
        y.at(oc, oy, ox) = acc;
      }
}

template <typename T>
void convt2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
             Tensor<T>& y) {
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  const int ho = convt_out_dim(hi, k, s, p), wo = convt_out_dim(wi, k, s, p);
  y.reset({co, ho, wo});
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        T acc = bias ? bias[oc] : T(0);
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int ny = oy + p - ky, nx = ox + p - kx;
              if (ny < 0 || nx < 0 || ny % s || nx % s) continue;
              const int iy = ny / s, ix = nx / s;
              if (iy >= hi || ix >= wi) continue;
              acc += x.at(ic, iy, ix) * w[((static_cast<std::int64_t>(ic) * co + oc) * k + ky) * k + kx];
            }
        y.at(oc, oy, ox) = acc;
      }
}

template <typename T>
void avgpool(const Tensor<T>& x, int f, Tensor<T>& y) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  y.reset({c, h / f, w / f});
  for (int ic = 0; ic < c; ++ic)
    for (int oy = 0; oy < h / f; ++oy)
      for (int ox = 0; ox < w / f; ++ox) {
        T acc = T(0);
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) acc += x.at(ic, oy * f + dy, ox * f + dx);
        y.at(ic, oy, ox) = acc / static_cast<T>(f * f);
      }
}

template <typename T>
void upsample_nearest(const Tensor<T>& x, int f, Tensor<T>& y) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  y.reset({c, h * f, w * f});
  for (int ic = 0; ic < c; ++ic)
    for (int oy = 0; oy < h * f; ++oy)
      for (int ox = 0; ox < w * f; ++ox) y.at(ic, oy, ox) = x.at(ic, oy / f, ox / f);
}

#define FDSC_INSTANTIATE(T)                                                            \
  template void conv2d<T>(const Tensor<T>&, const Tensor<T>&, const T*, int, int,      \
                          Tensor<T>&);                                                 \
  template void convt2d<T>(const Tensor<T>&, const Tensor<T>&, const T*, int, int,     \
                           Tensor<T>&);                                                \
  template void avgpool<T>(const Tensor<T>&, int, Tensor<T>&);                         \
  template void upsample_nearest<T>(const Tensor<T>&, int, Tensor<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc::kernels::ref
