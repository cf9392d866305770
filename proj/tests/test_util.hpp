#pragma once

// Shared test helpers: central-difference gradient checking and independent
// straight-line reference ops used as oracles. These deliberately do not call
// into fdsc::kernels so they stay an independent implementation path.

#include <cmath>
#include <functional>

#include "doctest.h"
#include "fdsc/autograd.hpp"
#include "fdsc/rng.hpp"

namespace testutil {

using fdsc::Rng;
using fdsc::Tensor;

// Max relative error between analytic gradients (already accumulated in
// param->grad) and central differences of loss() w.r.t. sampled entries.
inline double gradcheck_param(const std::function<double()>& loss,
                              const fdsc::ag::Var<double>& param, double h,
                              int max_entries, Rng& rng) {
  REQUIRE(!param->grad.empty());
  const std::int64_t n = param->val.numel();
  std::vector<std::int64_t> idx;
  if (n <= max_entries) {
    for (std::int64_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    std::uniform_int_distribution<std::int64_t> d(0, n - 1);
    for (int i = 0; i < max_entries; ++i) idx.push_back(d(rng));
  }
  double worst = 0;
  for (auto i : idx) {
    const double keep = param->val[i];
    param->val[i] = keep + h;
    const double lp = loss();
    param->val[i] = keep - h;
    const double lm = loss();
    param->val[i] = keep;
    const double fd = (lp - lm) / (2 * h);
    const double a = param->grad[i];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
    worst = std::max(worst, rel);
  }
  return worst;
}

inline Tensor<double> rand_t(Rng& rng, std::vector<int> dims, double lo = -1,
                             double hi = 1) {
  return fdsc::rand_uniform<double>(rng, std::move(dims), lo, hi);
}

// ---- straight-line reference ops (oracle path) ----

inline Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w,
                                 const Tensor<double>* b, int s, int p) {
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  const int ho = (hi + 2 * p - k) / s + 1, wo = (wi + 2 * p - k) / s + 1;
  Tensor<double> y({co, ho, wo});
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b ? (*b)[oc] : 0.0;
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              int iy = oy * s - p + ky, ix = ox * s - p + kx;
              if (iy < 0 || iy >= hi || ix < 0 || ix >= wi) continue;
              acc += x.at(ic, iy, ix) *
                     w[((static_cast<std::int64_t>(oc) * ci + ic) * k + ky) * k + kx];
            }
        y.at(oc, oy, ox) = acc;
      }
  return y;
}

inline Tensor<double> naive_convt(const Tensor<double>& x, const Tensor<double>& w,
                                  const Tensor<double>* b, int s, int p) {
  const int ci = x.dim(0), hi = x.dim(1), wi = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  const int ho = (hi - 1) * s - 2 * p + k, wo = (wi - 1) * s - 2 * p + k;
  Tensor<double> y({co, ho, wo});
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) y.at(oc, oy, ox) = b ? (*b)[oc] : 0.0;
  for (int ic = 0; ic < ci; ++ic)
    for (int iy = 0; iy < hi; ++iy)
      for (int ix = 0; ix < wi; ++ix)
        for (int oc = 0; oc < co; ++oc)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              int oy = iy * s - p + ky, ox = ix * s - p + kx;
              if (oy < 0 || oy >= ho || ox < 0 || ox >= wo) continue;
              y.at(oc, oy, ox) +=
                  x.at(ic, iy, ix) *
                  w[((static_cast<std::int64_t>(ic) * co + oc) * k + ky) * k + kx];
            }
  return y;
}

inline Tensor<double> naive_pool(const Tensor<double>& x, int f) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<double> y({c, h / f, w / f});
  for (int ic = 0; ic < c; ++ic)
    for (int oy = 0; oy < h / f; ++oy)
      for (int ox = 0; ox < w / f; ++ox) {
        double acc = 0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) acc += x.at(ic, oy * f + dy, ox * f + dx);
        y.at(ic, oy, ox) = acc / (f * f);
      }
  return y;
}

inline Tensor<double> naive_up(const Tensor<double>& x, int f) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<double> y({c, h * f, w * f});
  for (int ic = 0; ic < c; ++ic)
    for (int oy = 0; oy < h * f; ++oy)
      for (int ox = 0; ox < w * f; ++ox) y.at(ic, oy, ox) = x.at(ic, oy / f, ox / f);
  return y;
}

inline Tensor<double> tadd(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> y(a.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a[i] + b[i];
  return y;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.dims() == b.dims());
  double m = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
