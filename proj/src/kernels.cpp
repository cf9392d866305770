#include "fdsc/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fdsc::kernels {

namespace {

template <typename T>
void shape_check_conv(const Tensor<T>& x, const Tensor<T>& w) {
  check(x.rank() == 3 && w.rank() == 4, "conv2d: x must be (c,h,w), w (co,ci,k,k)");
  check(w.dim(2) == w.dim(3), "conv2d: square kernels only");
}

}  // namespace

template <typename T>
void conv2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
            Tensor<T>& y) {
  shape_check_conv(x, w);
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  check(w.dim(1) == ci, "conv2d: channel mismatch " + x.shape_str() + " vs " + w.shape_str());
  const int ho = conv_out_dim(hi, k, s, p), wo = conv_out_dim(wi, k, s, p);
  check(ho > 0 && wo > 0, "conv2d: empty output");
  y.reset({co, ho, wo});

  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < co; ++oc) {
    for (int oy = 0; oy < ho; ++oy) {
      T* yrow = yd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
      const T bz = bias ? bias[oc] : T(0);
      for (int ox = 0; ox < wo; ++ox) yrow[ox] = bz;
      for (int ic = 0; ic < ci; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= hi) continue;
          const T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
          const T* wrow = wd + ((static_cast<std::int64_t>(oc) * ci + ic) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wrow[kx];
            const int x0 = kx - p;
            int lo = 0, hi_ = wo;
            while (lo < wo && lo * s + x0 < 0) ++lo;
            while (hi_ > lo && (hi_ - 1) * s + x0 >= wi) --hi_;
            const T* xp = xrow + x0;
            if (s == 1) {
              for (int ox = lo; ox < hi_; ++ox) yrow[ox] += wv * xp[ox];
            } else {
              for (int ox = lo; ox < hi_; ++ox) yrow[ox] += wv * xp[ox * s];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_grad_input(const Tensor<T>& gy, const Tensor<T>& w, int s, int p,
                       Tensor<T>& gx) {
  const int co = w.dim(0), ci = w.dim(1), k = w.dim(2);
  const int ho = gy.dim(1), wo = gy.dim(2);
  check(gy.dim(0) == co, "conv2d_grad_input: channel mismatch");
  const int hi = gx.dim(1), wi = gx.dim(2);
  check(gx.dim(0) == ci, "conv2d_grad_input: gx channel mismatch");

  const T* gd = gy.data();
  const T* wd = w.data();
  T* xd = gx.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < ci; ++ic) {
    for (int iy = 0; iy < hi; ++iy) {
      T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
      for (int ix = 0; ix < wi; ++ix) xrow[ix] = T(0);
      for (int oc = 0; oc < co; ++oc) {
        for (int ky = 0; ky < k; ++ky) {
          const int num = iy + p - ky;
          if (num < 0 || num % s) continue;
          const int oy = num / s;
          if (oy >= ho) continue;
          const T* grow = gd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
          const T* wrow = wd + ((static_cast<std::int64_t>(oc) * ci + ic) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wrow[kx];
            for (int ix = (kx - p + s * 1000000) % s; ix < wi; ix += s) {
              // ix must satisfy (ix + p - kx) % s == 0; start from smallest valid >= 0
              const int ox = (ix + p - kx) / s;
              if (ix + p - kx < 0 || ox >= wo) continue;
              xrow[ix] += wv * grow[ox];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_grad_weight(const Tensor<T>& gy, const Tensor<T>& x, int s, int p,
                        Tensor<T>& gw, T* gb) {
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = gy.dim(0), ho = gy.dim(1), wo = gy.dim(2);
  const int k = gw.dim(2);

  const T* xd = x.data();
  const T* gd = gy.data();
  T* wd = gw.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < co; ++oc) {
    for (int ic = 0; ic < ci; ++ic) {
      T* wbase = wd + (static_cast<std::int64_t>(oc) * ci + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T acc = T(0);
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * s - p + ky;
            if (iy < 0 || iy >= hi) continue;
            const T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
            const T* grow = gd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * s - p + kx;
              if (ix < 0 || ix >= wi) continue;
              acc += grow[ox] * xrow[ix];
            }
          }
          wbase[ky * k + kx] += acc;
        }
      }
    }
  }
  if (gb) {
    for (int oc = 0; oc < co; ++oc) {
      T acc = T(0);
      const T* grow = gd + static_cast<std::int64_t>(oc) * ho * wo;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(ho) * wo; ++i) acc += grow[i];
      gb[oc] += acc;
    }
  }
}

template <typename T>
void convt2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
             Tensor<T>& y) {
  check(x.rank() == 3 && w.rank() == 4, "convt2d: x must be (c,h,w), w (ci,co,k,k)");
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  check(w.dim(0) == ci, "convt2d: channel mismatch " + x.shape_str() + " vs " + w.shape_str());
  const int ho = convt_out_dim(hi, k, s, p), wo = convt_out_dim(wi, k, s, p);
  check(ho > 0 && wo > 0, "convt2d: empty output");
  y.reset({co, ho, wo});

  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < co; ++oc) {
    for (int oy = 0; oy < ho; ++oy) {
      T* yrow = yd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
      const T bz = bias ? bias[oc] : T(0);
      for (int ox = 0; ox < wo; ++ox) yrow[ox] = bz;
      for (int ic = 0; ic < ci; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
          const int num = oy + p - ky;
          if (num < 0 || num % s) continue;
          const int iy = num / s;
          if (iy >= hi) continue;
          const T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
          const T* wrow = wd + ((static_cast<std::int64_t>(ic) * co + oc) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wrow[kx];
            for (int ox = 0; ox < wo; ++ox) {
              const int num2 = ox + p - kx;
              if (num2 < 0 || num2 % s) continue;
              const int ix = num2 / s;
              if (ix >= wi) continue;
              yrow[ox] += wv * xrow[ix];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void convt2d_grad_input(const Tensor<T>& gy, const Tensor<T>& w, int s, int p,
                        Tensor<T>& gx) {
  // gx[ic,iy,ix] = sum_{oc,ky,kx} gy[oc, iy*s-p+ky, ix*s-p+kx] * w[ic,oc,ky,kx]
  const int ci = w.dim(0), co = w.dim(1), k = w.dim(2);
  const int ho = gy.dim(1), wo = gy.dim(2);
  check(gy.dim(0) == co, "convt2d_grad_input: channel mismatch");
  const int hi = gx.dim(1), wi = gx.dim(2);
  check(gx.dim(0) == ci, "convt2d_grad_input: gx channel mismatch");

  const T* gd = gy.data();
  const T* wd = w.data();
  T* xd = gx.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < ci; ++ic) {
    for (int iy = 0; iy < hi; ++iy) {
      T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
      for (int ix = 0; ix < wi; ++ix) xrow[ix] = T(0);
      for (int oc = 0; oc < co; ++oc) {
        for (int ky = 0; ky < k; ++ky) {
          const int oy = iy * s - p + ky;
          if (oy < 0 || oy >= ho) continue;
          const T* grow = gd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
          const T* wrow = wd + ((static_cast<std::int64_t>(ic) * co + oc) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wrow[kx];
            const int x0 = kx - p;
            int lo = 0, hi_ = wi;
            while (lo < wi && lo * s + x0 < 0) ++lo;
            while (hi_ > lo && (hi_ - 1) * s + x0 >= wo) --hi_;
            const T* gp = grow + x0;
            for (int ix = lo; ix < hi_; ++ix) xrow[ix] += wv * gp[ix * s];
          }
        }
      }
    }
  }
}

template <typename T>
void convt2d_grad_weight(const Tensor<T>& gy, const Tensor<T>& x, int s, int p,
                         Tensor<T>& gw, T* gb) {
  // gw[ic,oc,ky,kx] += sum_{iy,ix} x[ic,iy,ix] * gy[oc, iy*s-p+ky, ix*s-p+kx]
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = gy.dim(0), ho = gy.dim(1), wo = gy.dim(2);
  const int k = gw.dim(2);

  const T* xd = x.data();
  const T* gd = gy.data();
  T* wd = gw.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < ci; ++ic) {
    for (int oc = 0; oc < co; ++oc) {
      T* wbase = wd + (static_cast<std::int64_t>(ic) * co + oc) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T acc = T(0);
          for (int iy = 0; iy < hi; ++iy) {
            const int oy = iy * s - p + ky;
            if (oy < 0 || oy >= ho) continue;
            const T* xrow = xd + (static_cast<std::int64_t>(ic) * hi + iy) * wi;
            const T* grow = gd + (static_cast<std::int64_t>(oc) * ho + oy) * wo;
            for (int ix = 0; ix < wi; ++ix) {
              const int ox = ix * s - p + kx;
              if (ox < 0 || ox >= wo) continue;
              acc += xrow[ix] * grow[ox];
            }
          }
          wbase[ky * k + kx] += acc;
        }
      }
    }
  }
  if (gb) {
    for (int oc = 0; oc < co; ++oc) {
      T acc = T(0);
      const T* grow = gd + static_cast<std::int64_t>(oc) * ho * wo;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(ho) * wo; ++i) acc += grow[i];
      gb[oc] += acc;
    }
  }
}

template <typename T>
void avgpool(const Tensor<T>& x, int f, Tensor<T>& y) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  check(h % f == 0 && w % f == 0, "avgpool: dims not divisible by factor");
  const int ho = h / f, wo = w / f;
  y.reset({c, ho, wo});
  const T inv = T(1) / static_cast<T>(f * f);
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < c; ++ic) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        T acc = T(0);
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) acc += x.at(ic, oy * f + dy, ox * f + dx);
        y.at(ic, oy, ox) = acc * inv;
      }
    }
  }
}

template <typename T>
void avgpool_grad(const Tensor<T>& gy, int f, Tensor<T>& gx) {
  const int c = gy.dim(0), ho = gy.dim(1), wo = gy.dim(2);
  const T inv = T(1) / static_cast<T>(f * f);
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < c; ++ic) {
    for (int iy = 0; iy < ho * f; ++iy)
      for (int ix = 0; ix < wo * f; ++ix)
        gx.at(ic, iy, ix) = gy.at(ic, iy / f, ix / f) * inv;
  }
}

template <typename T>
void upsample_nearest(const Tensor<T>& x, int f, Tensor<T>& y) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  y.reset({c, h * f, w * f});
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < c; ++ic) {
    for (int oy = 0; oy < h * f; ++oy)
      for (int ox = 0; ox < w * f; ++ox) y.at(ic, oy, ox) = x.at(ic, oy / f, ox / f);
  }
}

template <typename T>
void upsample_nearest_grad(const Tensor<T>& gy, int f, Tensor<T>& gx) {
  const int c = gx.dim(0), h = gx.dim(1), w = gx.dim(2);
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < c; ++ic) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        T acc = T(0);
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) acc += gy.at(ic, iy * f + dy, ix * f + dx);
        gx.at(ic, iy, ix) = acc;
      }
    }
  }
}

#define FDSC_INSTANTIATE(T)                                                             \
  template void conv2d<T>(const Tensor<T>&, const Tensor<T>&, const T*, int, int,       \
                          Tensor<T>&);                                                  \
  template void conv2d_grad_input<T>(const Tensor<T>&, const Tensor<T>&, int, int,      \
                                     Tensor<T>&);                                       \
  template void conv2d_grad_weight<T>(const Tensor<T>&, const Tensor<T>&, int, int,     \
                                      Tensor<T>&, T*);                                  \
  template void convt2d<T>(const Tensor<T>&, const Tensor<T>&, const T*, int, int,      \
                           Tensor<T>&);                                                 \
  template void convt2d_grad_input<T>(const Tensor<T>&, const Tensor<T>&, int, int,     \
                                      Tensor<T>&);                                      \
  template void convt2d_grad_weight<T>(const Tensor<T>&, const Tensor<T>&, int, int,    \
                                       Tensor<T>&, T*);                                 \
  template void avgpool<T>(const Tensor<T>&, int, Tensor<T>&);                          \
  template void avgpool_grad<T>(const Tensor<T>&, int, Tensor<T>&);                     \
  template void upsample_nearest<T>(const Tensor<T>&, int, Tensor<T>&);                 \
  template void upsample_nearest_grad<T>(const Tensor<T>&, int, Tensor<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc::kernels
