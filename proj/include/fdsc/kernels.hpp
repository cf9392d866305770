#pragma once

#include "fdsc/tensor.hpp"

// Convolution / resampling primitives. The fdsc::kernels functions are the
// OpenMP-parallel production kernels; fdsc::kernels::ref holds serial
// straight-loop references used by the tests and the benchmark tool.
// Parallel kernels partition work over output elements only, so results are
// bit-identical to the serial versions regardless of thread count.

namespace fdsc::kernels {

inline int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}
inline int convt_out_dim(int in, int k, int s, int p) {
  return (in - 1) * s - 2 * p + k;
}

// y[oc,oy,ox] = bias[oc] + sum_{ic,ky,kx} x[ic, oy*s-p+ky, ox*s-p+kx] * w[oc,ic,ky,kx]
template <typename T>
void conv2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
            Tensor<T>& y);

// gx[ic,iy,ix] = sum_{oc,ky,kx} gy[oc,(iy+p-ky)/s,(ix+p-kx)/s] * w[oc,ic,ky,kx]
template <typename T>
void conv2d_grad_input(const Tensor<T>& gy, const Tensor<T>& w, int s, int p,
                       Tensor<T>& gx);

// gw[oc,ic,ky,kx] += sum_{oy,ox} gy[oc,oy,ox] * x[ic, oy*s-p+ky, ox*s-p+kx]
// gb[oc] += sum gy[oc,:,:]   (both accumulate)
template <typename T>
void conv2d_grad_weight(const Tensor<T>& gy, const Tensor<T>& x, int s, int p,
                        Tensor<T>& gw, T* gb);

// Transposed conv, weight layout (ci, co, k, k):
// y[oc,oy,ox] = bias[oc] + sum_{ic,iy,ix,ky,kx : oy=iy*s-p+ky, ox=ix*s-p+kx} x[ic,iy,ix]*w[ic,oc,ky,kx]
template <typename T>
void convt2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
             Tensor<T>& y);

template <typename T>
void convt2d_grad_input(const Tensor<T>& gy, const Tensor<T>& w, int s, int p,
                        Tensor<T>& gx);

template <typename T>
void convt2d_grad_weight(const Tensor<T>& gy, const Tensor<T>& x, int s, int p,
                         Tensor<T>& gw, T* gb);

// f x f average pooling, stride f. Input dims must be divisible by f.
template <typename T>
void avgpool(const Tensor<T>& x, int f, Tensor<T>& y);
template <typename T>
void avgpool_grad(const Tensor<T>& gy, int f, Tensor<T>& gx);

// Nearest-neighbour upsampling by integer factor f.
template <typename T>
void upsample_nearest(const Tensor<T>& x, int f, Tensor<T>& y);
template <typename T>
void upsample_nearest_grad(const Tensor<T>& gy, int f, Tensor<T>& gx);

namespace ref {

template <typename T>
void conv2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
            Tensor<T>& y);
template <typename T>
void convt2d(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int s, int p,
             Tensor<T>& y);
template <typename T>
void avgpool(const Tensor<T>& x, int f, Tensor<T>& y);
template <typename T>
void upsample_nearest(const Tensor<T>& x, int f, Tensor<T>& y);

}  // namespace ref

}  // namespace fdsc::kernels
