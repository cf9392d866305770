#include "fdsc/freq_blocks.hpp"

namespace fdsc {

template <typename T>
void FreqTriple<T>::validate() const {
  const ag::Var<T>* bands[3] = {&high, &mid, &low};
  int scale = 1;
  int ref_h = -1, ref_w = -1;  // at full resolution
  for (int i = 0; i < 3; ++i, scale *= 2) {
    if (!*bands[i]) continue;
    const auto& v = (*bands[i])->val;
    check(v.rank() == 3, "FreqTriple: bands must be (c,h,w)");
    if (ref_h < 0) {
      ref_h = v.dim(1) * scale;
      ref_w = v.dim(2) * scale;
    } else {
      check(v.dim(1) * scale == ref_h && v.dim(2) * scale == ref_w,
            "FreqTriple: band resolutions must be 1 : 1/2 : 1/4, got " +
                v.shape_str());
    }
  }
}

template <typename T>
ag::Var<T> maybe_act(const ag::Var<T>& x, Activation act) {
  if (!x || act == Activation::none) return x;
  return ag::leaky_relu(x, static_cast<T>(kLReluSlope));
}

template <typename T>
Conv<T> make_conv(ParamStore<T>& ps, const std::string& name, Rng& rng, int ci,
                  int co, int k, int stride, int pad, bool bias) {
  Conv<T> c;
  c.w = ps.create(name + ".w", xavier_init<T>(rng, {co, ci, k, k}));
  if (bias) c.b = ps.create(name + ".b", Tensor<T>({co}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

template <typename T>
ConvT<T> make_convt(ParamStore<T>& ps, const std::string& name, Rng& rng, int ci,
                    int co, int k, int stride, int pad, bool bias) {
  ConvT<T> c;
  c.w = ps.create(name + ".w", xavier_init<T>(rng, {ci, co, k, k}));
  if (bias) c.b = ps.create(name + ".b", Tensor<T>({co}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

template <typename T>
Conv<T> make_down_conv(ParamStore<T>& ps, const std::string& name, Rng& rng,
                       int ci, int co, int factor) {
  if (factor == 2) return make_conv(ps, name, rng, ci, co, 3, 2, 1);
  check(factor == 4, "make_down_conv: factor must be 2 or 4");
  return make_conv(ps, name, rng, ci, co, 4, 4, 0);
}

template <typename T>
ConvT<T> make_up_conv(ParamStore<T>& ps, const std::string& name, Rng& rng,
                      int ci, int co, int factor) {
  if (factor == 2) return make_convt(ps, name, rng, ci, co, 4, 2, 1);
  check(factor == 4, "make_up_conv: factor must be 2 or 4");
  return make_convt(ps, name, rng, ci, co, 4, 4, 0);
}

namespace {

template <typename T>
ag::Var<T> acc(ag::Var<T> sum, const ag::Var<T>& term) {
  if (!term) return sum;
  return sum ? ag::add(sum, term) : term;
}

int floor_frac(double frac, int c) {
  return static_cast<int>(std::floor(frac * c + 1e-6));
}

}  // namespace

// ---- MoConv ----

template <typename T>
MoConv<T>::MoConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                  int c_in, ChannelSplit split_in, int c_out,
                  ChannelSplit split_out) {
  in_c = split_in.counts(c_in);
  out_c = split_out.counts(c_out);
  const auto& i = in_c;
  const auto& o = out_c;
  if (i.high && o.high) hh = make_conv(ps, prefix + ".hh", rng, i.high, o.high, 3, 1, 1);
  if (i.mid && o.mid) mm = make_conv(ps, prefix + ".mm", rng, i.mid, o.mid, 3, 1, 1);
  if (i.low && o.low) ll = make_conv(ps, prefix + ".ll", rng, i.low, o.low, 3, 1, 1);
  if (i.high && o.mid) hm = make_down_conv(ps, prefix + ".hm", rng, i.high, o.mid, 2);
  if (i.high && o.low) hl = make_down_conv(ps, prefix + ".hl", rng, i.high, o.low, 4);
  if (i.mid && o.low) ml = make_down_conv(ps, prefix + ".ml", rng, i.mid, o.low, 2);
  if (i.mid && o.high) mh = make_up_conv(ps, prefix + ".mh", rng, i.mid, o.high, 2);
  if (i.low && o.high) lh = make_up_conv(ps, prefix + ".lh", rng, i.low, o.high, 4);
  if (i.low && o.mid) lm = make_up_conv(ps, prefix + ".lm", rng, i.low, o.mid, 2);
}

template <typename T>
FreqTriple<T> MoConv<T>::forward(const FreqTriple<T>& x) const {
  x.validate();
  check(static_cast<bool>(x.high) == (in_c.high > 0) &&
            static_cast<bool>(x.mid) == (in_c.mid > 0) &&
            static_cast<bool>(x.low) == (in_c.low > 0),
        "MoConv: input bands do not match the block's channel split");
  FreqTriple<T> y;
  if (out_c.high) {
    ag::Var<T> s;
    if (hh) s = acc(s, (*hh)(x.high));
    if (mh) s = acc(s, (*mh)(x.mid));
    if (lh) s = acc(s, (*lh)(x.low));
    y.high = s;
  }
  if (out_c.mid) {
    ag::Var<T> s;
    if (mm) s = acc(s, (*mm)(x.mid));
    if (hm) s = acc(s, (*hm)(x.high));
    if (lm) s = acc(s, (*lm)(x.low));
    y.mid = s;
  }
  if (out_c.low) {
    ag::Var<T> s;
    if (ll) s = acc(s, (*ll)(x.low));
    if (hl) s = acc(s, (*hl)(x.high));
    if (ml) s = acc(s, (*ml)(x.mid));
    y.low = s;
  }
  return y;
}

// ---- MTorbDown ----

template <typename T>
MTorbDown<T>::MTorbDown(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                        int c_in, ChannelSplit split_in, int c_out,
                        ChannelSplit split_out)
    : moconv(ps, prefix + ".moconv", rng, c_in, split_in, c_out, split_out) {
  const auto i = moconv.in_c;
  const auto o = moconv.out_c;
  if (o.high) {
    down_h = make_conv(ps, prefix + ".down_h", rng, o.high, o.high, 3, 2, 1);
    if (i.high) sc_h = make_conv(ps, prefix + ".sc_h", rng, i.high, o.high, 1, 2, 0);
  }
  if (o.mid) {
    down_m = make_conv(ps, prefix + ".down_m", rng, o.mid, o.mid, 3, 2, 1);
    if (i.mid) sc_m = make_conv(ps, prefix + ".sc_m", rng, i.mid, o.mid, 1, 2, 0);
  }
  if (o.low) {
    down_l = make_conv(ps, prefix + ".down_l", rng, o.low, o.low, 3, 2, 1);
    if (i.low) sc_l = make_conv(ps, prefix + ".sc_l", rng, i.low, o.low, 1, 2, 0);
  }
}

template <typename T>
FreqTriple<T> MTorbDown<T>::forward(const FreqTriple<T>& x, Activation act) const {
  for (const auto* b : {&x.high, &x.mid, &x.low})
    if (*b)
      check((*b)->val.dim(1) % 2 == 0 && (*b)->val.dim(2) % 2 == 0,
            "MTorbDown: odd spatial dims (inputs must be padded upstream)");
  FreqTriple<T> yp = moconv.forward(x);
  FreqTriple<T> y;
  if (yp.high) {
    y.high = (*down_h)(maybe_act(yp.high, act));
    if (sc_h) y.high = ag::add(y.high, (*sc_h)(x.high));
  }
  if (yp.mid) {
    y.mid = (*down_m)(maybe_act(yp.mid, act));
    if (sc_m) y.mid = ag::add(y.mid, (*sc_m)(x.mid));
  }
  if (yp.low) {
    y.low = (*down_l)(maybe_act(yp.low, act));
    if (sc_l) y.low = ag::add(y.low, (*sc_l)(x.low));
  }
  return y;
}

// ---- MTorbUp ----

template <typename T>
MTorbUp<T>::MTorbUp(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                    int c_in, ChannelSplit split_in, int c_out,
                    ChannelSplit split_out)
    : moconv(ps, prefix + ".moconv", rng, c_in, split_in, c_out, split_out) {
  const auto i = moconv.in_c;
  const auto o = moconv.out_c;
  if (o.high) {
    up_h = make_convt(ps, prefix + ".up_h", rng, o.high, o.high, 4, 2, 1);
    if (i.high) sc_h = make_convt(ps, prefix + ".sc_h", rng, i.high, o.high, 2, 2, 0);
  }
  if (o.mid) {
    up_m = make_convt(ps, prefix + ".up_m", rng, o.mid, o.mid, 4, 2, 1);
    if (i.mid) sc_m = make_convt(ps, prefix + ".sc_m", rng, i.mid, o.mid, 2, 2, 0);
  }
  if (o.low) {
    up_l = make_convt(ps, prefix + ".up_l", rng, o.low, o.low, 4, 2, 1);
    if (i.low) sc_l = make_convt(ps, prefix + ".sc_l", rng, i.low, o.low, 2, 2, 0);
  }
}

template <typename T>
FreqTriple<T> MTorbUp<T>::forward(const FreqTriple<T>& x, Activation act) const {
  FreqTriple<T> yp = moconv.forward(x);
  FreqTriple<T> y;
  if (yp.high) {
    y.high = (*up_h)(maybe_act(yp.high, act));
    if (sc_h) y.high = ag::add(y.high, (*sc_h)(x.high));
  }
  if (yp.mid) {
    y.mid = (*up_m)(maybe_act(yp.mid, act));
    if (sc_m) y.mid = ag::add(y.mid, (*sc_m)(x.mid));
  }
  if (yp.low) {
    y.low = (*up_l)(maybe_act(yp.low, act));
    if (sc_l) y.low = ag::add(y.low, (*sc_l)(x.low));
  }
  return y;
}

// ---- GDN ----

template <typename T>
Gdn<T>::Gdn(ParamStore<T>& ps, const std::string& prefix, int channels) {
  // gamma = g^2 starts near 0.1 on the diagonal with a small off-diagonal
  // pedestal so every entry keeps a live gradient; beta = beta_min + t^2
  // starts at 1.
  Tensor<T> g0({channels, channels});
  for (int i = 0; i < channels; ++i)
    for (int j = 0; j < channels; ++j)
      g0[static_cast<std::int64_t>(i) * channels + j] =
          std::sqrt(i == j ? T(0.1) : T(1e-3));
  Tensor<T> t0({channels});
  for (int i = 0; i < channels; ++i) t0[i] = std::sqrt(T(1) - kBetaMin);
  g_ = ps.create(prefix + ".g", std::move(g0));
  t_ = ps.create(prefix + ".t", std::move(t0));
}

template <typename T>
GdnTriple<T>::GdnTriple(ParamStore<T>& ps, const std::string& prefix,
                        ChannelSplit::Counts c) {
  if (c.high) h_.emplace(ps, prefix + ".h", c.high);
  if (c.mid) m_.emplace(ps, prefix + ".m", c.mid);
  if (c.low) l_.emplace(ps, prefix + ".l", c.low);
}

template <typename T>
FreqTriple<T> GdnTriple<T>::forward(const FreqTriple<T>& x, bool inverse) const {
  FreqTriple<T> y;
  if (x.high) y.high = h_->forward(x.high, inverse);
  if (x.mid) y.mid = m_->forward(x.mid, inverse);
  if (x.low) y.low = l_->forward(x.low, inverse);
  return y;
}

// ---- OctConv ----

template <typename T>
OctConv<T>::OctConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                    int c_in, double alpha_in, int c_out, double alpha_out,
                    OctKernels kcfg)
    : kc(kcfg) {
  ci_l = floor_frac(alpha_in, c_in);
  ci_h = c_in - ci_l;
  co_l = floor_frac(alpha_out, c_out);
  co_h = c_out - co_l;
  const int k = kc.k_intra, p = kc.pad_intra();
  if (ci_h && co_h) hh = make_conv(ps, prefix + ".hh", rng, ci_h, co_h, k, 1, p);
  if (ci_l && co_l) ll = make_conv(ps, prefix + ".ll", rng, ci_l, co_l, k, 1, p);
  if (ci_h && co_l) hl = make_conv(ps, prefix + ".hl", rng, ci_h, co_l, k, 1, p);
  if (ci_l && co_h) lh = make_conv(ps, prefix + ".lh", rng, ci_l, co_h, k, 1, p);
}

template <typename T>
BandPair<T> OctConv<T>::forward(const BandPair<T>& x) const {
  BandPair<T> y;
  if (co_h) {
    ag::Var<T> s;
    if (hh) s = acc(s, (*hh)(ag::avgpool(x.high, 2)));
    if (lh) s = acc(s, ag::avgpool(ag::upsample_nearest((*lh)(x.low), 2), 2));
    y.high = s;
  }
  if (co_l) {
    ag::Var<T> s;
    if (ll) s = acc(s, (*ll)(ag::avgpool(x.low, 2)));
    if (hl) s = acc(s, (*hl)(ag::avgpool(x.high, 4)));
    y.low = s;
  }
  return y;
}

// ---- GoConv ----

template <typename T>
GoConv<T>::GoConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                  int c_in, double alpha_in, int c_out, double alpha_out,
                  OctKernels kcfg)
    : kc(kcfg) {
  ci_l = floor_frac(alpha_in, c_in);
  ci_h = c_in - ci_l;
  co_l = floor_frac(alpha_out, c_out);
  co_h = c_out - co_l;
  const int kd = kc.k_down, pd = kc.pad_down();
  const int ku = kc.k_up, pu = kc.pad_up();
  if (ci_h && co_h) hh = make_conv(ps, prefix + ".hh", rng, ci_h, co_h, kd, 2, pd);
  if (ci_l && co_l) ll = make_conv(ps, prefix + ".ll", rng, ci_l, co_l, kd, 2, pd);
  if (co_h && co_l) {
    hl = make_conv(ps, prefix + ".hl", rng, co_h, co_l, kd, 2, pd);
    lh = make_convt(ps, prefix + ".lh", rng, co_l, co_h, ku, 2, pu);
  }
}

template <typename T>
BandPair<T> GoConv<T>::forward(const BandPair<T>& x) const {
  BandPair<T> y;
  ag::Var<T> yhh, yll;
  if (hh) yhh = (*hh)(x.high);
  if (ll) yll = (*ll)(x.low);
  y.high = yhh;
  y.low = yll;
  if (lh && yll) y.high = acc(y.high, (*lh)(yll));
  if (hl && yhh) y.low = acc(y.low, (*hl)(yhh));
  return y;
}

// ---- ToRB ----

template <typename T>
Torb<T>::Torb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
              double alpha_in, int c_out, double alpha_out, OctKernels kcfg)
    : kc(kcfg) {
  ci_l = floor_frac(alpha_in, c_in);
  ci_h = c_in - ci_l;
  co_l = floor_frac(alpha_out, c_out);
  co_h = c_out - co_l;
  const int ki = kc.k_intra, pi = kc.pad_intra();
  const int kd = kc.k_down, pd = kc.pad_down();
  const int ku = kc.k_up, pu = kc.pad_up();
  if (ci_h && co_h) hh = make_conv(ps, prefix + ".hh", rng, ci_h, co_h, ki, 1, pi);
  if (ci_l && co_l) ll = make_conv(ps, prefix + ".ll", rng, ci_l, co_l, ki, 1, pi);
  if (ci_h && co_l) hl = make_conv(ps, prefix + ".hl", rng, ci_h, co_l, kd, 2, pd);
  if (ci_l && co_h) lh = make_convt(ps, prefix + ".lh", rng, ci_l, co_h, ku, 2, pu);
  if (co_h) {
    second_h = make_conv(ps, prefix + ".second_h", rng, co_h, co_h, kd, 2, pd);
    if (ci_h) sc_h = make_conv(ps, prefix + ".sc_h", rng, ci_h, co_h, 1, 2, 0);
  }
  if (co_l) {
    second_l = make_conv(ps, prefix + ".second_l", rng, co_l, co_l, kd, 2, pd);
    if (ci_l) sc_l = make_conv(ps, prefix + ".sc_l", rng, ci_l, co_l, 1, 2, 0);
  }
}

template <typename T>
BandPair<T> Torb<T>::forward(const BandPair<T>& x, Activation act) const {
  BandPair<T> y;
  if (co_h) {
    ag::Var<T> yp;
    if (hh) yp = acc(yp, (*hh)(x.high));
    if (lh) yp = acc(yp, (*lh)(x.low));
    y.high = (*second_h)(maybe_act(yp, act));
    if (sc_h) y.high = ag::add(y.high, (*sc_h)(x.high));
  }
  if (co_l) {
    ag::Var<T> yp;
    if (ll) yp = acc(yp, (*ll)(x.low));
    if (hl) yp = acc(yp, (*hl)(x.high));
    y.low = (*second_l)(maybe_act(yp, act));
    if (sc_l) y.low = ag::add(y.low, (*sc_l)(x.low));
  }
  return y;
}

#define FDSC_INSTANTIATE(T)                                                            \
  template struct FreqTriple<T>;                                                       \
  template ag::Var<T> maybe_act<T>(const ag::Var<T>&, Activation);                     \
  template Conv<T> make_conv<T>(ParamStore<T>&, const std::string&, Rng&, int, int,    \
                                int, int, int, bool);                                  \
  template ConvT<T> make_convt<T>(ParamStore<T>&, const std::string&, Rng&, int, int,  \
                                  int, int, int, bool);                                \
  template Conv<T> make_down_conv<T>(ParamStore<T>&, const std::string&, Rng&, int,    \
                                     int, int);                                        \
  template ConvT<T> make_up_conv<T>(ParamStore<T>&, const std::string&, Rng&, int,     \
                                    int, int);                                         \
  template struct MoConv<T>;                                                           \
  template struct MTorbDown<T>;                                                        \
  template struct MTorbUp<T>;                                                          \
  template class Gdn<T>;                                                               \
  template class GdnTriple<T>;                                                         \
  template struct OctConv<T>;                                                          \
  template struct GoConv<T>;                                                           \
  template struct Torb<T>;

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
