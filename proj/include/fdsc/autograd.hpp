#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fdsc/tensor.hpp"

// Reverse-mode autodiff over Tensor<T>. Graphs are built eagerly by the op
// functions below; backward(root) runs the tape in reverse topological order.
// Gradients accumulate, so parameters can feed several consumers.

namespace fdsc::ag {

template <typename T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> back;

  Tensor<T>& grad_buf() {
    if (grad.empty()) grad.reset(val.dims());
    return grad;
  }
  void zero_grad() { grad = Tensor<T>(); }
  T scalar() const { return val[0]; }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

// true if gradients should flow into this node
template <typename T>
bool track(const Var<T>& v) {
  return v && v->requires_grad;
}

template <typename T>
void backward(const Var<T>& root);

// ---- ops ----

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int s, int p);
template <typename T>
Var<T> convt2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int s, int p);
template <typename T>
Var<T> avgpool(const Var<T>& x, int f);
template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int f);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul_scalar(const Var<T>& a, T c);
template <typename T>
Var<T> add_scalar(const Var<T>& a, T c);

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T>
Var<T> abs_v(const Var<T>& x);
template <typename T>
Var<T> exp_v(const Var<T>& x);
template <typename T>
Var<T> log2_v(const Var<T>& x);

// forward: clamp(x, lo, hi); gradient passes through unchanged
template <typename T>
Var<T> clamp_st(const Var<T>& x, T lo, T hi);

// forward: max(x, bound); grad passes where x >= bound or where it would push
// x back toward the feasible region
template <typename T>
Var<T> lower_bound(const Var<T>& x, T bound);
template <typename T>
Var<T> upper_bound(const Var<T>& x, T bound);

template <typename T>
Var<T> concat_c(const std::vector<Var<T>>& xs);
template <typename T>
Var<T> slice_c(const Var<T>& x, int start, int count);

// y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2)  (mul instead of div when
// inverse). Reparameterized: beta = beta_min + t^2, gamma = g^2.
template <typename T>
Var<T> gdn(const Var<T>& x, const Var<T>& g, const Var<T>& t, bool inverse,
           T beta_min);

// non-overlapping window self-attention, single head
template <typename T>
Var<T> window_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, int win);

// y + delta * (u - 1/2); delta may be null (unit interval). u is a plain
// tensor of U(0,1) draws.
template <typename T>
Var<T> quantize_noise(const Var<T>& y, const Var<T>& delta, const Tensor<T>& u);

// P = Phi((y-mu+d/2)/sigma) - Phi((y-mu-d/2)/sigma), floored at pmin.
// delta may be null (unit-width interval).
template <typename T>
Var<T> gaussian_mass(const Var<T>& y, const Var<T>& mu, const Var<T>& sigma,
                     const Var<T>& delta, T pmin);

template <typename T>
Var<T> sum_all(const Var<T>& x);
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

// elementwise mask (plain tensor), y = x * m
template <typename T>
Var<T> mask(const Var<T>& x, const Tensor<T>& m);

}  // namespace fdsc::ag
