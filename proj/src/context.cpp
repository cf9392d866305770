#include "fdsc/context.hpp"

namespace fdsc {

template <typename T>
Tensor<T> checkerboard_mask(int c, int h, int w, bool anchors) {
  Tensor<T> m({c, h, w});
  for (int ic = 0; ic < c; ++ic)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        m.at(ic, y, x) = (((y + x) % 2 == 0) == anchors) ? T(1) : T(0);
  return m;
}

template <typename T>
DownRb<T>::DownRb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int ci,
                  int co)
    : c1(make_conv(ps, prefix + ".c1", rng, ci, co, 3, 2, 1)),
      c2(make_conv(ps, prefix + ".c2", rng, co, co, 3, 1, 1)),
      sc(make_conv(ps, prefix + ".sc", rng, ci, co, 1, 2, 0)) {}

template <typename T>
ag::Var<T> DownRb<T>::forward(const ag::Var<T>& x) const {
  auto main = c2(ag::leaky_relu(c1(x), static_cast<T>(kLReluSlope)));
  return ag::add(main, sc(x));
}

template <typename T>
EpNet<T>::EpNet(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int cin,
                int hidden, int band_channels)
    : c1(make_conv(ps, prefix + ".c1", rng, cin, hidden, 1, 1, 0)),
      c2(make_conv(ps, prefix + ".c2", rng, hidden, hidden, 1, 1, 0)),
      c3(make_conv(ps, prefix + ".c3", rng, hidden, 2 * band_channels, 1, 1, 0)),
      out_channels(band_channels) {}

template <typename T>
std::pair<ag::Var<T>, ag::Var<T>> EpNet<T>::forward(
    const std::vector<ag::Var<T>>& inputs) const {
  const int h = inputs[0]->val.dim(1), w = inputs[0]->val.dim(2);
  for (const auto& in : inputs)
    check(in->val.dim(1) == h && in->val.dim(2) == w,
          "EpNet: context resolution mismatch, got " + in->val.shape_str());
  const T slope = static_cast<T>(kLReluSlope);
  auto t = ag::leaky_relu(c1(ag::concat_c<T>(inputs)), slope);
  t = ag::leaky_relu(c2(t), slope);
  t = c3(t);
  auto mu = ag::slice_c(t, 0, out_channels);
  auto sigma = ag::lower_bound(ag::slice_c(t, out_channels, out_channels),
                               static_cast<T>(kSigmaMin));
  return {mu, sigma};
}

template <typename T>
ContextModel<T>::ContextModel(ParamStore<T>& ps, const std::string& prefix,
                              Rng& rng, ChannelSplit::Counts y_channels,
                              int m_total, ContextWiring wiring)
    : wiring_(wiring), ctx_ch_(2 * m_total), yc_(y_channels) {
  if (yc_.high)
    intra_h_ = make_conv(ps, prefix + ".cm_h", rng, yc_.high, ctx_ch_, 5, 1, 2);
  if (yc_.mid)
    intra_m_ = make_conv(ps, prefix + ".cm_m", rng, yc_.mid, ctx_ch_, 5, 1, 2);
  if (yc_.low)
    intra_l_ = make_conv(ps, prefix + ".cm_l", rng, yc_.low, ctx_ch_, 5, 1, 2);

  if (yc_.high && yc_.low && wiring_.h_to_l) {
    hl1_.emplace(ps, prefix + ".hl1", rng, yc_.high, ctx_ch_);
    hl2_.emplace(ps, prefix + ".hl2", rng, ctx_ch_, ctx_ch_);
  }
  if (yc_.high && yc_.mid && wiring_.h_to_m)
    hm_.emplace(ps, prefix + ".hm", rng, yc_.high, ctx_ch_);
  if (yc_.mid && yc_.low && wiring_.m_to_l)
    ml_.emplace(ps, prefix + ".ml", rng, yc_.mid, ctx_ch_);

  // P_h sees [intra, psi]; P_m adds C_h-m; P_l adds C_h-l and C_m-l
  if (yc_.high)
    p_h_.emplace(ps, prefix + ".p_h", rng, 2 * ctx_ch_, ctx_ch_, yc_.high);
  if (yc_.mid)
    p_m_.emplace(ps, prefix + ".p_m", rng, 3 * ctx_ch_, ctx_ch_, yc_.mid);
  if (yc_.low)
    p_l_.emplace(ps, prefix + ".p_l", rng, 4 * ctx_ch_, ctx_ch_, yc_.low);
}

template <typename T>
ag::Var<T> ContextModel<T>::intra(const ag::Var<T>& src, Band band,
                                  CtxStage stage) const {
  const int h = src->val.dim(1), w = src->val.dim(2);
  if (stage == CtxStage::anchors) {
    // anchors carry no intra-band context
    return ag::leaf(Tensor<T>({ctx_ch_, h, w}));
  }
  const auto& conv = band == Band::high ? intra_h_
                     : band == Band::mid ? intra_m_
                                         : intra_l_;
  check(conv.has_value(), "intra: band not present");
  // only anchor positions may leak into stage-2 context
  auto masked = ag::mask(src, checkerboard_mask<T>(src->val.dim(0), h, w, true));
  return (*conv)(masked);
}

template <typename T>
ag::Var<T> ContextModel<T>::cross_h_to_l(const ag::Var<T>& y_hat_h) const {
  const int h = y_hat_h->val.dim(1), w = y_hat_h->val.dim(2);
  check(h % 4 == 0 && w % 4 == 0, "cross_h_to_l: resolution not divisible by 4");
  if (!hl1_) return ag::leaf(Tensor<T>({ctx_ch_, h / 4, w / 4}));
  return hl2_->forward(hl1_->forward(y_hat_h));
}

template <typename T>
ag::Var<T> ContextModel<T>::cross_h_to_m(const ag::Var<T>& y_hat_h) const {
  const int h = y_hat_h->val.dim(1), w = y_hat_h->val.dim(2);
  check(h % 2 == 0 && w % 2 == 0, "cross_h_to_m: odd resolution");
  if (!hm_) return ag::leaf(Tensor<T>({ctx_ch_, h / 2, w / 2}));
  return hm_->forward(y_hat_h);
}

template <typename T>
ag::Var<T> ContextModel<T>::cross_m_to_l(const ag::Var<T>& y_hat_m) const {
  const int h = y_hat_m->val.dim(1), w = y_hat_m->val.dim(2);
  check(h % 2 == 0 && w % 2 == 0, "cross_m_to_l: odd resolution");
  if (!ml_) return ag::leaf(Tensor<T>({ctx_ch_, h / 2, w / 2}));
  return ml_->forward(y_hat_m);
}

template <typename T>
std::pair<ag::Var<T>, ag::Var<T>> ContextModel<T>::params_high(
    const ag::Var<T>& intra_ctx, const ag::Var<T>& psi) const {
  return p_h_->forward({intra_ctx, psi});
}

template <typename T>
std::pair<ag::Var<T>, ag::Var<T>> ContextModel<T>::params_mid(
    const ag::Var<T>& intra_ctx, const ag::Var<T>& ctx_hm,
    const ag::Var<T>& psi) const {
  return p_m_->forward({intra_ctx, ctx_hm, psi});
}

template <typename T>
std::pair<ag::Var<T>, ag::Var<T>> ContextModel<T>::params_low(
    const ag::Var<T>& intra_ctx, const ag::Var<T>& ctx_hl,
    const ag::Var<T>& ctx_ml, const ag::Var<T>& psi) const {
  return p_l_->forward({intra_ctx, ctx_hl, ctx_ml, psi});
}

#define FDSC_INSTANTIATE(T)                                        \
  template Tensor<T> checkerboard_mask<T>(int, int, int, bool);    \
  template struct DownRb<T>;                                       \
  template struct EpNet<T>;                                        \
  template class ContextModel<T>;

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
