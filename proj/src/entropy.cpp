#include "fdsc/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace fdsc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

const std::vector<double>& scale_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kScaleTableSize);
    const double lo = std::log(kSigmaMin), hi = std::log(kScaleTableMax);
    for (int i = 0; i < kScaleTableSize; ++i)
      t[i] = std::exp(lo + (hi - lo) * i / (kScaleTableSize - 1));
    return t;
  }();
  return table;
}

double snap_scale(double s) {
  const auto& t = scale_table();
  auto it = std::lower_bound(t.begin(), t.end(), s);
  if (it == t.end()) return t.back();
  return *it;
}

CdfRow quantize_probs(std::int32_t kmin, const std::vector<double>& probs) {
  const int n = static_cast<int>(probs.size());
  check(n >= 1 && n <= (1 << kCdfPrecision), "quantize_probs: bad row size");
  const std::uint32_t total = 1u << kCdfPrecision;
  double mass = 0;
  for (double p : probs) {
    check(p > 0, "quantize_probs: probabilities must be positive");
    mass += p;
  }
  CdfRow row;
  row.kmin = kmin;
  row.cum.resize(n + 1);
  row.cum[0] = 0;
  double acc = 0;
  for (int i = 1; i <= n; ++i) {
    acc += probs[i - 1];
    row.cum[i] = static_cast<std::uint32_t>(
        std::llround(acc / mass * static_cast<double>(total)));
  }
  // enforce strictly increasing (width >= 1) with exact endpoints
  for (int i = 1; i <= n; ++i)
    row.cum[i] = std::max(row.cum[i], row.cum[i - 1] + 1);
  row.cum[n] = total;
  for (int i = n - 1; i >= 1; --i)
    row.cum[i] = std::min(row.cum[i], row.cum[i + 1] - 1);
  check(row.cum[0] == 0 && row.cum[n] == total && row.cum[1] >= 1,
        "quantize_probs: normalization failed");
  return row;
}

CdfRow conditional_cdf_row(double m, double s) {
  const std::int64_t center = std::llround(m);
  const double frac = m - static_cast<double>(center);
  const int reach = static_cast<int>(std::ceil(6.0 * s + 0.5)) + 1;
  std::vector<double> probs(2 * reach + 1);
  for (int j = -reach; j <= reach; ++j) {
    const double hi = (static_cast<double>(j) + 0.5 - frac) / s;
    const double lo = (static_cast<double>(j) - 0.5 - frac) / s;
    probs[j + reach] = std::max(kPMin, normal_cdf(hi) - normal_cdf(lo));
  }
  return quantize_probs(static_cast<std::int32_t>(center - reach), probs);
}

// ---- FactorizedModel ----

namespace {

// widths per layer: 1 -> 3 -> 3 -> 3 -> 1
constexpr int kDims[5] = {1, 3, 3, 3, 1};

double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// forward + backward state of one chain evaluation
struct ChainGrads {
  double f = 0;
  double dx = 0;
  double dh[4][3][3] = {};
  double db[4][3] = {};
  double da[3][3] = {};
};

}  // namespace

template <typename T>
FactorizedModel<T>::FactorizedModel(ParamStore<T>& ps, const std::string& prefix,
                                    int channels, double init_scale)
    : channels_(channels) {
  const double scale = std::pow(init_scale, 1.0 / (kLayers));
  Rng rng(0xfed5ull + static_cast<std::uint64_t>(channels));
  for (int k = 0; k < kLayers; ++k) {
    const int din = kDims[k], dout = kDims[k + 1];
    Tensor<T> h({channels, dout, din});
    const double init = std::log(std::expm1(1.0 / (scale * dout)));
    for (std::int64_t i = 0; i < h.numel(); ++i) h[i] = static_cast<T>(init);
    h_[k] = ps.create(prefix + ".h" + std::to_string(k), std::move(h));
    b_[k] = ps.create(prefix + ".b" + std::to_string(k),
                      rand_uniform<T>(rng, {channels, dout}, T(-0.5), T(0.5)));
    if (k < kLayers - 1)
      a_[k] = ps.create(prefix + ".a" + std::to_string(k), Tensor<T>({channels, dout}));
  }
}

// Evaluates F at x for one channel; when `grads` is non-null also fills the
// full backward state.
template <typename T>
static void chain_eval(const FactorizedModel<T>&, int, double) = delete;

namespace {

template <typename T>
ChainGrads eval_channel(const ag::Var<T> h[], const ag::Var<T> b[],
                        const ag::Var<T> a[], int ch, double x, bool with_grads) {
  ChainGrads out;
  double v[4][3];  // inputs of each layer (v[0] = {x})
  double u[4][3];  // pre-gate outputs
  v[0][0] = x;
  double vin[3] = {x, 0, 0};
  for (int k = 0; k < FactorizedModel<T>::kLayers; ++k) {
    const int din = kDims[k], dout = kDims[k + 1];
    const T* hrow = h[k]->val.data() + static_cast<std::int64_t>(ch) * dout * din;
    const T* brow = b[k]->val.data() + static_cast<std::int64_t>(ch) * dout;
    double uo[3];
    for (int i = 0; i < dout; ++i) {
      double acc = static_cast<double>(brow[i]);
      for (int j = 0; j < din; ++j)
        acc += softplus(static_cast<double>(hrow[i * din + j])) * vin[j];
      uo[i] = acc;
      u[k][i] = acc;
    }
    if (k < FactorizedModel<T>::kLayers - 1) {
      const T* arow = a[k]->val.data() + static_cast<std::int64_t>(ch) * dout;
      for (int i = 0; i < dout; ++i) {
        const double gate = std::tanh(static_cast<double>(arow[i]));
        vin[i] = uo[i] + gate * std::tanh(uo[i]);
        v[k + 1][i] = vin[i];
      }
    } else {
      out.f = sigmoid(uo[0]);
    }
  }
  if (!with_grads) return out;

  // backward
  double gu[3] = {out.f * (1.0 - out.f), 0, 0};
  for (int k = FactorizedModel<T>::kLayers - 1; k >= 0; --k) {
    const int din = kDims[k], dout = kDims[k + 1];
    const T* hrow = h[k]->val.data() + static_cast<std::int64_t>(ch) * dout * din;
    const double* vin_k = (k == 0) ? &x : v[k];
    double gv[3] = {0, 0, 0};
    for (int i = 0; i < dout; ++i) {
      out.db[k][i] = gu[i];
      for (int j = 0; j < din; ++j) {
        const double hraw = static_cast<double>(hrow[i * din + j]);
        out.dh[k][i][j] = gu[i] * vin_k[j] * sigmoid(hraw);
        gv[j] += softplus(hraw) * gu[i];
      }
    }
    if (k == 0) {
      out.dx = gv[0];
      break;
    }
    const int dprev = kDims[k];
    const T* arow = a[k - 1]->val.data() + static_cast<std::int64_t>(ch) * dprev;
    for (int i = 0; i < dprev; ++i) {
      const double araw = static_cast<double>(arow[i]);
      const double gate = std::tanh(araw);
      const double tu = std::tanh(u[k - 1][i]);
      out.da[k - 1][i] = gv[i] * tu * (1.0 - gate * gate);
      gu[i] = gv[i] * (1.0 + gate * (1.0 - tu * tu));
    }
  }
  return out;
}

}  // namespace

template <typename T>
double FactorizedModel<T>::cdf(int ch, double x) const {
  return eval_channel<T>(h_, b_, a_, ch, x, false).f;
}

template <typename T>
double FactorizedModel<T>::quantile(int ch, double p) const {
  double lo = -2.0, hi = 2.0;
  while (cdf(ch, lo) > p && lo > -1e6) lo *= 2;
  while (cdf(ch, hi) < p && hi < 1e6) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(ch, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

template <typename T>
CdfRow FactorizedModel<T>::cdf_row(int ch) const {
  const double qlo = quantile(ch, kTailMass);
  const double qhi = quantile(ch, 1.0 - kTailMass);
  std::int64_t kmin = static_cast<std::int64_t>(std::floor(qlo)) - 1;
  std::int64_t kmax = static_cast<std::int64_t>(std::ceil(qhi)) + 1;
  check(kmax - kmin + 1 <= (1 << kCdfPrecision), "cdf_row: support too wide");
  std::vector<double> probs;
  for (std::int64_t k = kmin; k <= kmax; ++k)
    probs.push_back(std::max(kPMin, cdf(ch, static_cast<double>(k) + 0.5) -
                                        cdf(ch, static_cast<double>(k) - 0.5)));
  return quantize_probs(static_cast<std::int32_t>(kmin), probs);
}

template <typename T>
ag::Var<T> FactorizedModel<T>::likelihood(const ag::Var<T>& z) const {
  check(z->val.dim(0) == channels_, "FactorizedModel: channel mismatch");
  const int c = channels_;
  const std::int64_t hw = static_cast<std::int64_t>(z->val.dim(1)) * z->val.dim(2);

  Tensor<T> p(z->val.dims());
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    for (std::int64_t i = 0; i < hw; ++i) {
      const double x = static_cast<double>(z->val[ch * hw + i]);
      const double fp = eval_channel<T>(h_, b_, a_, ch, x + 0.5, false).f;
      const double fm = eval_channel<T>(h_, b_, a_, ch, x - 0.5, false).f;
      p[ch * hw + i] = static_cast<T>(std::max(kPMin, fp - fm));
    }
  }

  std::vector<ag::Var<T>> parents{z};
  for (int k = 0; k < kLayers; ++k) {
    parents.push_back(h_[k]);
    parents.push_back(b_[k]);
    if (k < kLayers - 1) parents.push_back(a_[k]);
  }
  auto node = std::make_shared<ag::Node<T>>();
  node->val = std::move(p);
  for (auto& pp : parents)
    if (pp->requires_grad) node->requires_grad = true;
  node->parents = parents;
  if (!node->requires_grad) return node;

  auto h0 = h_[0], h1 = h_[1], h2 = h_[2], h3 = h_[3];
  auto b0 = b_[0], b1 = b_[1], b2 = b_[2], b3 = b_[3];
  auto a0 = a_[0], a1 = a_[1], a2 = a_[2];
  node->back = [z, h0, h1, h2, h3, b0, b1, b2, b3, a0, a1, a2, c,
                hw](ag::Node<T>& self) {
    const ag::Var<T> h[4] = {h0, h1, h2, h3};
    const ag::Var<T> b[4] = {b0, b1, b2, b3};
    const ag::Var<T> a[3] = {a0, a1, a2};
    const bool zgrad = ag::track(z);
    Tensor<T>* gz = zgrad ? &z->grad_buf() : nullptr;
    Tensor<T>* gh[4];
    Tensor<T>* gb[4];
    Tensor<T>* ga[3];
    for (int k = 0; k < 4; ++k) {
      gh[k] = ag::track(h[k]) ? &h[k]->grad_buf() : nullptr;
      gb[k] = ag::track(b[k]) ? &b[k]->grad_buf() : nullptr;
      if (k < 3) ga[k] = ag::track(a[k]) ? &a[k]->grad_buf() : nullptr;
    }
    // parallel over channels: every channel's parameter rows are touched by
    // exactly one thread, z grads are per-element
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      for (std::int64_t i = 0; i < hw; ++i) {
        const std::int64_t e = ch * hw + i;
        if (self.val[e] <= static_cast<T>(kPMin)) continue;
        const double g = static_cast<double>(self.grad[e]);
        if (g == 0) continue;
        const double x = static_cast<double>(z->val[e]);
        const ChainGrads up = eval_channel<T>(h, b, a, ch, x + 0.5, true);
        const ChainGrads dn = eval_channel<T>(h, b, a, ch, x - 0.5, true);
        if (gz) (*gz)[e] += static_cast<T>(g * (up.dx - dn.dx));
        for (int k = 0; k < 4; ++k) {
          const int din = kDims[k], dout = kDims[k + 1];
          for (int ii = 0; ii < dout; ++ii) {
            if (gb[k])
              (*gb[k])[static_cast<std::int64_t>(ch) * dout + ii] +=
                  static_cast<T>(g * (up.db[k][ii] - dn.db[k][ii]));
            if (gh[k])
              for (int j = 0; j < din; ++j)
                (*gh[k])[(static_cast<std::int64_t>(ch) * dout + ii) * din + j] +=
                    static_cast<T>(g * (up.dh[k][ii][j] - dn.dh[k][ii][j]));
            if (k < 3 && ga[k])
              (*ga[k])[static_cast<std::int64_t>(ch) * dout + ii] +=
                  static_cast<T>(g * (up.da[k][ii] - dn.da[k][ii]));
          }
        }
      }
    }
  };
  return node;
}

template <typename T>
double neg_log2_sum(const Tensor<T>& p) {
  double acc = 0;
  for (std::int64_t i = 0; i < p.numel(); ++i)
    acc -= std::log2(static_cast<double>(p[i]));
  return acc;
}

template <typename T>
ag::Var<T> rate_bits_node(const ag::Var<T>& p) {
  return ag::mul_scalar(ag::sum_all(ag::log2_v(p)), T(-1));
}

#define FDSC_INSTANTIATE(T)                          \
  template class FactorizedModel<T>;                 \
  template double neg_log2_sum<T>(const Tensor<T>&); \
  template ag::Var<T> rate_bits_node<T>(const ag::Var<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
