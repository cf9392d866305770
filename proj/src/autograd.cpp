#include "fdsc/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "fdsc/kernels.hpp"

namespace fdsc::ag {

namespace {

template <typename T>
void axpy(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  const std::int64_t n = dst.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

// C(m x n) += A(m x k) * B(k x n)
template <typename T>
void gemm_acc(int m, int k, int n, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::int64_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const T av = a[static_cast<std::int64_t>(i) * k + l];
      const T* brow = b + static_cast<std::int64_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
T norm_cdf(T x) {
  return T(0.5) * std::erfc(-x * T(0.7071067811865475244));
}
template <typename T>
T norm_pdf(T x) {
  return std::exp(T(-0.5) * x * x) * T(0.3989422804014326779);
}

template <typename T>
Var<T> make_node(Tensor<T> val, std::vector<Var<T>> parents) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(val);
  for (auto& p : parents)
    if (p && p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

}  // namespace

template <typename T>
void backward(const Var<T>& root) {
  check(root->val.numel() == 1, "backward: root must be scalar");
  // iterative topological order over parents
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node<T>* p = n->parents[i++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root->grad_buf().fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->back && n->requires_grad && !n->grad.empty()) n->back(*n);
  }
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int s, int p) {
  Tensor<T> y;
  kernels::conv2d(x->val, w->val, b ? b->val.data() : nullptr, s, p, y);
  auto n = make_node(std::move(y), b ? std::vector<Var<T>>{x, w, b}
                                     : std::vector<Var<T>>{x, w});
  if (n->requires_grad)
    n->back = [x, w, b, s, p](Node<T>& self) {
      if (track(x)) {
        Tensor<T> gx(x->val.dims());
        kernels::conv2d_grad_input(self.grad, w->val, s, p, gx);
        axpy(x->grad_buf(), gx);
      }
      if (track(w))
        kernels::conv2d_grad_weight(self.grad, x->val, s, p, w->grad_buf(),
                                    b && track(b) ? b->grad_buf().data() : nullptr);
    };
  return n;
}

template <typename T>
Var<T> convt2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int s, int p) {
  Tensor<T> y;
  kernels::convt2d(x->val, w->val, b ? b->val.data() : nullptr, s, p, y);
  auto n = make_node(std::move(y), b ? std::vector<Var<T>>{x, w, b}
                                     : std::vector<Var<T>>{x, w});
  if (n->requires_grad)
    n->back = [x, w, b, s, p](Node<T>& self) {
      if (track(x)) {
        Tensor<T> gx(x->val.dims());
        kernels::convt2d_grad_input(self.grad, w->val, s, p, gx);
        axpy(x->grad_buf(), gx);
      }
      if (track(w))
        kernels::convt2d_grad_weight(self.grad, x->val, s, p, w->grad_buf(),
                                     b && track(b) ? b->grad_buf().data() : nullptr);
    };
  return n;
}

template <typename T>
Var<T> avgpool(const Var<T>& x, int f) {
  Tensor<T> y;
  kernels::avgpool(x->val, f, y);
  auto n = make_node(std::move(y), {x});
  if (n->requires_grad)
    n->back = [x, f](Node<T>& self) {
      Tensor<T> gx(x->val.dims());
      kernels::avgpool_grad(self.grad, f, gx);
      axpy(x->grad_buf(), gx);
    };
  return n;
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int f) {
  Tensor<T> y;
  kernels::upsample_nearest(x->val, f, y);
  auto n = make_node(std::move(y), {x});
  if (n->requires_grad)
    n->back = [x, f](Node<T>& self) {
      Tensor<T> gx(x->val.dims());
      kernels::upsample_nearest_grad(self.grad, f, gx);
      axpy(x->grad_buf(), gx);
    };
  return n;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check(a->val.same_shape(b->val), "add: shape mismatch " + a->val.shape_str() +
                                       " vs " + b->val.shape_str());
  Tensor<T> y(a->val.dims());
  const std::int64_t n = y.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = a->val[i] + b->val[i];
  auto node = make_node(std::move(y), {a, b});
  if (node->requires_grad)
    node->back = [a, b](Node<T>& self) {
      if (track(a)) axpy(a->grad_buf(), self.grad);
      if (track(b)) axpy(b->grad_buf(), self.grad);
    };
  return node;
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check(a->val.same_shape(b->val), "sub: shape mismatch");
  Tensor<T> y(a->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a->val[i] - b->val[i];
  auto node = make_node(std::move(y), {a, b});
  if (node->requires_grad)
    node->back = [a, b](Node<T>& self) {
      if (track(a)) axpy(a->grad_buf(), self.grad);
      if (track(b)) {
        Tensor<T>& g = b->grad_buf();
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
      }
    };
  return node;
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check(a->val.same_shape(b->val), "mul: shape mismatch");
  Tensor<T> y(a->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a->val[i] * b->val[i];
  auto node = make_node(std::move(y), {a, b});
  if (node->requires_grad)
    node->back = [a, b](Node<T>& self) {
      if (track(a)) {
        Tensor<T>& g = a->grad_buf();
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * b->val[i];
      }
      if (track(b)) {
        Tensor<T>& g = b->grad_buf();
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * a->val[i];
      }
    };
  return node;
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T c) {
  Tensor<T> y(a->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a->val[i] * c;
  auto node = make_node(std::move(y), {a});
  if (node->requires_grad)
    node->back = [a, c](Node<T>& self) {
      Tensor<T>& g = a->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * c;
    };
  return node;
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T c) {
  Tensor<T> y(a->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a->val[i] + c;
  auto node = make_node(std::move(y), {a});
  if (node->requires_grad)
    node->back = [a](Node<T>& self) {
      if (track(a)) axpy(a->grad_buf(), self.grad);
    };
  return node;
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i)
    y[i] = x->val[i] >= T(0) ? x->val[i] : slope * x->val[i];
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x, slope](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i)
        g[i] += self.grad[i] * (x->val[i] >= T(0) ? T(1) : slope);
    };
  return node;
}

template <typename T>
Var<T> abs_v(const Var<T>& x) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::abs(x->val[i]);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i) {
        const T s = x->val[i] > T(0) ? T(1) : (x->val[i] < T(0) ? T(-1) : T(0));
        g[i] += self.grad[i] * s;
      }
    };
  return node;
}

template <typename T>
Var<T> exp_v(const Var<T>& x) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::exp(x->val[i]);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * self.val[i];
    };
  return node;
}

template <typename T>
Var<T> log2_v(const Var<T>& x) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::log2(x->val[i]);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x](Node<T>& self) {
      constexpr T inv_ln2 = T(1.4426950408889634074);
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i)
        g[i] += self.grad[i] * inv_ln2 / x->val[i];
    };
  return node;
}

template <typename T>
Var<T> clamp_st(const Var<T>& x, T lo, T hi) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i)
    y[i] = std::min(hi, std::max(lo, x->val[i]));
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x](Node<T>& self) { axpy(x->grad_buf(), self.grad); };
  return node;
}

template <typename T>
Var<T> lower_bound(const Var<T>& x, T bound) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::max(bound, x->val[i]);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x, bound](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i)
        if (x->val[i] >= bound || self.grad[i] < T(0)) g[i] += self.grad[i];
    };
  return node;
}

template <typename T>
Var<T> upper_bound(const Var<T>& x, T bound) {
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::min(bound, x->val[i]);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x, bound](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i)
        if (x->val[i] <= bound || self.grad[i] > T(0)) g[i] += self.grad[i];
    };
  return node;
}

template <typename T>
Var<T> concat_c(const std::vector<Var<T>>& xs) {
  check(!xs.empty(), "concat_c: empty input");
  const int h = xs[0]->val.dim(1), w = xs[0]->val.dim(2);
  int c = 0;
  for (auto& x : xs) {
    check(x->val.dim(1) == h && x->val.dim(2) == w, "concat_c: spatial mismatch");
    c += x->val.dim(0);
  }
  Tensor<T> y({c, h, w});
  std::int64_t off = 0;
  for (auto& x : xs) {
    std::copy(x->val.data(), x->val.data() + x->val.numel(), y.data() + off);
    off += x->val.numel();
  }
  auto node = make_node(std::move(y), xs);
  if (node->requires_grad)
    node->back = [xs](Node<T>& self) {
      std::int64_t off = 0;
      for (auto& x : xs) {
        if (track(x)) {
          Tensor<T>& g = x->grad_buf();
          for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[off + i];
        }
        off += x->val.numel();
      }
    };
  return node;
}

template <typename T>
Var<T> slice_c(const Var<T>& x, int start, int count) {
  const int h = x->val.dim(1), w = x->val.dim(2);
  check(start >= 0 && start + count <= x->val.dim(0), "slice_c: out of range");
  Tensor<T> y({count, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  std::copy(x->val.data() + start * plane, x->val.data() + (start + count) * plane,
            y.data());
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x, start, plane](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < self.grad.numel(); ++i)
        g[start * plane + i] += self.grad[i];
    };
  return node;
}

template <typename T>
Var<T> gdn(const Var<T>& x, const Var<T>& g, const Var<T>& t, bool inverse,
           T beta_min) {
  const int c = x->val.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(x->val.dim(1)) * x->val.dim(2);
  check(g->val.rank() == 2 && g->val.dim(0) == c && g->val.dim(1) == c,
        "gdn: gamma must be (c,c)");
  check(t->val.rank() == 1 && t->val.dim(0) == c, "gdn: beta must be (c)");

  // gamma = g^2, beta = beta_min + t^2
  Tensor<T> gamma({c, c});
  for (std::int64_t i = 0; i < gamma.numel(); ++i) gamma[i] = g->val[i] * g->val[i];

  Tensor<T> u(x->val.dims());
  for (std::int64_t i = 0; i < u.numel(); ++i) u[i] = x->val[i] * x->val[i];

  auto den = std::make_shared<Tensor<T>>(x->val.dims());  // s_i(pos)
  {
    Tensor<T>& s = *den;
    for (int i = 0; i < c; ++i) {
      const T beta = beta_min + t->val[i] * t->val[i];
      T* srow = s.data() + i * hw;
      for (std::int64_t j = 0; j < hw; ++j) srow[j] = beta;
    }
    gemm_acc(c, c, static_cast<int>(hw), gamma.data(), u.data(), s.data());
  }

  Tensor<T> y(x->val.dims());
  {
    const Tensor<T>& s = *den;
    const std::int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const T r = std::sqrt(s[i]);
      y[i] = inverse ? x->val[i] * r : x->val[i] / r;
    }
  }

  auto node = make_node(std::move(y), {x, g, t});
  if (node->requires_grad)
    node->back = [x, g, t, den, inverse, c, hw](Node<T>& self) {
      const Tensor<T>& s = *den;
      const std::int64_t n = x->val.numel();
      // q_i = G_i * x_i * s^(-3/2)  (gdn)   or   G_i * x_i * s^(-1/2) (igdn)
      Tensor<T> q(x->val.dims());
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) {
        const T sp = inverse ? T(1) / std::sqrt(s[i])
                             : T(1) / (s[i] * std::sqrt(s[i]));
        q[i] = self.grad[i] * x->val[i] * sp;
      }
      if (track(x)) {
        Tensor<T>& gx = x->grad_buf();
        // direct term
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
          const T r = std::sqrt(s[i]);
          gx[i] += self.grad[i] * (inverse ? r : T(1) / r);
        }
        // cross term: -/+ x_m * sum_i q_i gamma_im
        Tensor<T> gammaT({c, c});
        for (int i = 0; i < c; ++i)
          for (int j = 0; j < c; ++j)
            gammaT[static_cast<std::int64_t>(i) * c + j] =
                g->val[static_cast<std::int64_t>(j) * c + i] *
                g->val[static_cast<std::int64_t>(j) * c + i];
        Tensor<T> cross({c, x->val.dim(1), x->val.dim(2)});
        gemm_acc(c, c, static_cast<int>(hw), gammaT.data(), q.data(), cross.data());
        const T sign = inverse ? T(1) : T(-1);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) gx[i] += sign * x->val[i] * cross[i];
      }
      if (track(g) || track(t)) {
        // dL/dgamma_ij = sign/2 * sum_pos q_i u_j ; dL/dbeta_i = sign/2 sum_pos q_i
        const T sign = inverse ? T(0.5) : T(-0.5);
        Tensor<T> u(x->val.dims());
        for (std::int64_t i = 0; i < n; ++i) u[i] = x->val[i] * x->val[i];
        if (track(g)) {
          Tensor<T> dgamma({c, c});
#pragma omp parallel for schedule(static)
          for (int i = 0; i < c; ++i) {
            const T* qrow = q.data() + static_cast<std::int64_t>(i) * hw;
            for (int j = 0; j < c; ++j) {
              const T* urow = u.data() + static_cast<std::int64_t>(j) * hw;
              T acc = T(0);
              for (std::int64_t p = 0; p < hw; ++p) acc += qrow[p] * urow[p];
              dgamma[static_cast<std::int64_t>(i) * c + j] = sign * acc;
            }
          }
          Tensor<T>& gg = g->grad_buf();
          for (std::int64_t i = 0; i < gg.numel(); ++i)
            gg[i] += dgamma[i] * T(2) * g->val[i];
        }
        if (track(t)) {
          Tensor<T>& gt = t->grad_buf();
          for (int i = 0; i < c; ++i) {
            const T* qrow = q.data() + static_cast<std::int64_t>(i) * hw;
            T acc = T(0);
            for (std::int64_t p = 0; p < hw; ++p) acc += qrow[p];
            gt[i] += sign * acc * T(2) * t->val[i];
          }
        }
      }
    };
  return node;
}

template <typename T>
Var<T> window_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, int win) {
  const int c = q->val.dim(0), h = q->val.dim(1), w = q->val.dim(2);
  check(h % win == 0 && w % win == 0, "window_attention: dims not divisible by window");
  const int wy_n = h / win, wx_n = w / win, nt = win * win;
  const T scale = T(1) / std::sqrt(static_cast<T>(c));

  // probs saved for backward: (windows, nt, nt)
  auto probs = std::make_shared<Tensor<T>>(
      std::vector<int>{wy_n * wx_n, nt, nt});
  Tensor<T> y({c, h, w});

#pragma omp parallel for collapse(2) schedule(static)
  for (int wy = 0; wy < wy_n; ++wy) {
    for (int wx = 0; wx < wx_n; ++wx) {
      const int widx = wy * wx_n + wx;
      T* P = probs->data() + static_cast<std::int64_t>(widx) * nt * nt;
      // S[j][t] = scale * q_j . k_t
      for (int j = 0; j < nt; ++j) {
        const int jy = wy * win + j / win, jx = wx * win + j % win;
        T mx = -std::numeric_limits<T>::infinity();
        for (int t = 0; t < nt; ++t) {
          const int ty = wy * win + t / win, tx = wx * win + t % win;
          T dot = T(0);
          for (int ic = 0; ic < c; ++ic) dot += q->val.at(ic, jy, jx) * k->val.at(ic, ty, tx);
          P[j * nt + t] = dot * scale;
          mx = std::max(mx, P[j * nt + t]);
        }
        T sum = T(0);
        for (int t = 0; t < nt; ++t) {
          P[j * nt + t] = std::exp(P[j * nt + t] - mx);
          sum += P[j * nt + t];
        }
        for (int t = 0; t < nt; ++t) P[j * nt + t] /= sum;
        // O_j = sum_t P[j,t] v_t
        for (int ic = 0; ic < c; ++ic) {
          T acc = T(0);
          for (int t = 0; t < nt; ++t) {
            const int ty = wy * win + t / win, tx = wx * win + t % win;
            acc += P[j * nt + t] * v->val.at(ic, ty, tx);
          }
          y.at(ic, jy, jx) = acc;
        }
      }
    }
  }

  auto node = make_node(std::move(y), {q, k, v});
  if (node->requires_grad)
    node->back = [q, k, v, probs, win, c, h, w, nt, wy_n, wx_n, scale](Node<T>& self) {
      Tensor<T>& gq = q->grad_buf();
      Tensor<T>& gk = k->grad_buf();
      Tensor<T>& gv = v->grad_buf();
#pragma omp parallel for collapse(2) schedule(static)
      for (int wy = 0; wy < wy_n; ++wy) {
        for (int wx = 0; wx < wx_n; ++wx) {
          const int widx = wy * wx_n + wx;
          const T* P = probs->data() + static_cast<std::int64_t>(widx) * nt * nt;
          std::vector<T> dP(nt * nt), dS(nt * nt);
          auto pos = [&](int t, int& ty, int& tx) {
            ty = wy * win + t / win;
            tx = wx * win + t % win;
          };
          // dV and dP
          for (int t = 0; t < nt; ++t) {
            int ty, tx;
            pos(t, ty, tx);
            for (int ic = 0; ic < c; ++ic) {
              T acc = T(0);
              for (int j = 0; j < nt; ++j) {
                int jy, jx;
                pos(j, jy, jx);
                acc += P[j * nt + t] * self.grad.at(ic, jy, jx);
              }
              gv.at(ic, ty, tx) += acc;
            }
          }
          for (int j = 0; j < nt; ++j) {
            int jy, jx;
            pos(j, jy, jx);
            for (int t = 0; t < nt; ++t) {
              int ty, tx;
              pos(t, ty, tx);
              T acc = T(0);
              for (int ic = 0; ic < c; ++ic)
                acc += self.grad.at(ic, jy, jx) * v->val.at(ic, ty, tx);
              dP[j * nt + t] = acc;
            }
            T row = T(0);
            for (int t = 0; t < nt; ++t) row += dP[j * nt + t] * P[j * nt + t];
            for (int t = 0; t < nt; ++t)
              dS[j * nt + t] = P[j * nt + t] * (dP[j * nt + t] - row);
          }
          for (int j = 0; j < nt; ++j) {
            int jy, jx;
            pos(j, jy, jx);
            for (int ic = 0; ic < c; ++ic) {
              T acc = T(0);
              for (int t = 0; t < nt; ++t) {
                int ty, tx;
                pos(t, ty, tx);
                acc += dS[j * nt + t] * k->val.at(ic, ty, tx);
              }
              gq.at(ic, jy, jx) += acc * scale;
            }
          }
          for (int t = 0; t < nt; ++t) {
            int ty, tx;
            pos(t, ty, tx);
            for (int ic = 0; ic < c; ++ic) {
              T acc = T(0);
              for (int j = 0; j < nt; ++j) {
                int jy, jx;
                pos(j, jy, jx);
                acc += dS[j * nt + t] * q->val.at(ic, jy, jx);
              }
              gk.at(ic, ty, tx) += acc * scale;
            }
          }
        }
      }
    };
  return node;
}

template <typename T>
Var<T> quantize_noise(const Var<T>& y, const Var<T>& delta, const Tensor<T>& u) {
  check(u.same_shape(y->val), "quantize_noise: noise shape mismatch");
  if (delta) check(delta->val.same_shape(y->val), "quantize_noise: delta shape mismatch");
  Tensor<T> out(y->val.dims());
  auto un = std::make_shared<Tensor<T>>(u);
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const T d = delta ? delta->val[i] : T(1);
    out[i] = y->val[i] + d * (u[i] - T(0.5));
  }
  auto node = make_node(std::move(out), delta ? std::vector<Var<T>>{y, delta}
                                              : std::vector<Var<T>>{y});
  if (node->requires_grad)
    node->back = [y, delta, un](Node<T>& self) {
      if (track(y)) axpy(y->grad_buf(), self.grad);
      if (delta && track(delta)) {
        Tensor<T>& g = delta->grad_buf();
        for (std::int64_t i = 0; i < g.numel(); ++i)
          g[i] += self.grad[i] * ((*un)[i] - T(0.5));
      }
    };
  return node;
}

template <typename T>
Var<T> gaussian_mass(const Var<T>& y, const Var<T>& mu, const Var<T>& sigma,
                     const Var<T>& delta, T pmin) {
  check(y->val.same_shape(mu->val) && y->val.same_shape(sigma->val),
        "gaussian_mass: shape mismatch");
  Tensor<T> p(y->val.dims());
  const std::int64_t n = p.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    const T d = delta ? delta->val[i] : T(1);
    const T c = y->val[i] - mu->val[i];
    const T s = sigma->val[i];
    const T mass = norm_cdf((c + d / 2) / s) - norm_cdf((c - d / 2) / s);
    p[i] = std::max(pmin, mass);
  }
  auto node = make_node(std::move(p), delta
                                          ? std::vector<Var<T>>{y, mu, sigma, delta}
                                          : std::vector<Var<T>>{y, mu, sigma});
  if (node->requires_grad)
    node->back = [y, mu, sigma, delta, pmin](Node<T>& self) {
      const std::int64_t n = self.val.numel();
      Tensor<T>* gy = track(y) ? &y->grad_buf() : nullptr;
      Tensor<T>* gmu = track(mu) ? &mu->grad_buf() : nullptr;
      Tensor<T>* gsig = track(sigma) ? &sigma->grad_buf() : nullptr;
      Tensor<T>* gd = delta && track(delta) ? &delta->grad_buf() : nullptr;
      for (std::int64_t i = 0; i < n; ++i) {
        if (self.val[i] <= pmin) continue;  // floored: flat
        const T g = self.grad[i];
        const T d = delta ? delta->val[i] : T(1);
        const T c = y->val[i] - mu->val[i];
        const T s = sigma->val[i];
        const T a = (c + d / 2) / s, b = (c - d / 2) / s;
        const T pa = norm_pdf(a), pb = norm_pdf(b);
        const T dpdy = (pa - pb) / s;
        if (gy) (*gy)[i] += g * dpdy;
        if (gmu) (*gmu)[i] -= g * dpdy;
        if (gsig) (*gsig)[i] += g * (-(pa * a - pb * b) / s);
        if (gd) (*gd)[i] += g * (pa + pb) / (2 * s);
      }
    };
  return node;
}

template <typename T>
Var<T> sum_all(const Var<T>& x) {
  Tensor<T> y({1});
  T acc = T(0);
  for (std::int64_t i = 0; i < x->val.numel(); ++i) acc += x->val[i];
  y[0] = acc;
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      const T gv = self.grad[0];
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += gv;
    };
  return node;
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  check(a->val.same_shape(b->val), "mse: shape mismatch");
  const std::int64_t n = a->val.numel();
  Tensor<T> y({1});
  T acc = T(0);
  for (std::int64_t i = 0; i < n; ++i) {
    const T d = a->val[i] - b->val[i];
    acc += d * d;
  }
  y[0] = acc / static_cast<T>(n);
  auto node = make_node(std::move(y), {a, b});
  if (node->requires_grad)
    node->back = [a, b, n](Node<T>& self) {
      const T g = self.grad[0] * T(2) / static_cast<T>(n);
      Tensor<T>* ga = track(a) ? &a->grad_buf() : nullptr;
      Tensor<T>* gb = track(b) ? &b->grad_buf() : nullptr;
      for (std::int64_t i = 0; i < n; ++i) {
        const T d = a->val[i] - b->val[i];
        if (ga) (*ga)[i] += g * d;
        if (gb) (*gb)[i] -= g * d;
      }
    };
  return node;
}

template <typename T>
Var<T> mask(const Var<T>& x, const Tensor<T>& m) {
  check(m.same_shape(x->val), "mask: shape mismatch");
  Tensor<T> y(x->val.dims());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = x->val[i] * m[i];
  auto mm = std::make_shared<Tensor<T>>(m);
  auto node = make_node(std::move(y), {x});
  if (node->requires_grad)
    node->back = [x, mm](Node<T>& self) {
      Tensor<T>& g = x->grad_buf();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * (*mm)[i];
    };
  return node;
}

#define FDSC_INSTANTIATE(T)                                                          \
  template void backward<T>(const Var<T>&);                                          \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);  \
  template Var<T> convt2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int); \
  template Var<T> avgpool<T>(const Var<T>&, int);                                    \
  template Var<T> upsample_nearest<T>(const Var<T>&, int);                           \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> mul_scalar<T>(const Var<T>&, T);                                   \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                   \
  template Var<T> leaky_relu<T>(const Var<T>&, T);                                   \
  template Var<T> abs_v<T>(const Var<T>&);                                           \
  template Var<T> exp_v<T>(const Var<T>&);                                           \
  template Var<T> log2_v<T>(const Var<T>&);                                          \
  template Var<T> clamp_st<T>(const Var<T>&, T, T);                                  \
  template Var<T> lower_bound<T>(const Var<T>&, T);                                  \
  template Var<T> upper_bound<T>(const Var<T>&, T);                                  \
  template Var<T> concat_c<T>(const std::vector<Var<T>>&);                           \
  template Var<T> slice_c<T>(const Var<T>&, int, int);                               \
  template Var<T> gdn<T>(const Var<T>&, const Var<T>&, const Var<T>&, bool, T);      \
  template Var<T> window_attention<T>(const Var<T>&, const Var<T>&, const Var<T>&,   \
                                      int);                                          \
  template Var<T> quantize_noise<T>(const Var<T>&, const Var<T>&, const Tensor<T>&); \
  template Var<T> gaussian_mass<T>(const Var<T>&, const Var<T>&, const Var<T>&,      \
                                   const Var<T>&, T);                                \
  template Var<T> sum_all<T>(const Var<T>&);                                         \
  template Var<T> mse<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> mask<T>(const Var<T>&, const Tensor<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc::ag
