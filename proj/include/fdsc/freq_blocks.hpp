#pragma once

#include <cmath>
#include <optional>

#include "fdsc/params.hpp"

namespace fdsc {

// Fraction of channels assigned to the low (alpha) and mid (beta) bands.
struct ChannelSplit {
  double alpha = 0.0;
  double beta = 0.0;

  struct Counts {
    int high = 0, mid = 0, low = 0;
  };

  // low/mid get the floor, high absorbs the remainder. The small epsilon
  // compensates binary representation of fractions like 1/3 so that
  // e.g. 192 * (1/3) still counts as 64.
  Counts counts(int c) const {
    check(alpha >= 0 && beta >= 0 && alpha + beta <= 1.0 + 1e-12,
          "ChannelSplit: need 0 <= alpha, beta and alpha+beta <= 1");
    Counts n;
    n.low = static_cast<int>(std::floor(alpha * c + 1e-6));
    n.mid = static_cast<int>(std::floor(beta * c + 1e-6));
    n.high = c - n.low - n.mid;
    check(n.high >= 0, "ChannelSplit: negative high channel count");
    return n;
  }
};

enum class Activation { none, lrelu };

constexpr double kLReluSlope = 0.01;

// Three co-registered feature maps at resolutions r, r/2, r/4. A band with
// zero channels is a null Var.
template <typename T>
struct FreqTriple {
  ag::Var<T> high, mid, low;

  bool has_high() const { return static_cast<bool>(high); }
  bool has_mid() const { return static_cast<bool>(mid); }
  bool has_low() const { return static_cast<bool>(low); }

  // validates the 1 : 1/2 : 1/4 resolution contract between present bands
  void validate() const;
};

// Two bands at ratio 1 : 1/2, used by the two-frequency baseline blocks.
template <typename T>
struct BandPair {
  ag::Var<T> high, low;
};

template <typename T>
struct Conv {
  ag::Var<T> w, b;
  int stride = 1, pad = 0;
  ag::Var<T> operator()(const ag::Var<T>& x) const {
    return ag::conv2d(x, w, b, stride, pad);
  }
};

template <typename T>
struct ConvT {
  ag::Var<T> w, b;
  int stride = 1, pad = 0;
  ag::Var<T> operator()(const ag::Var<T>& x) const {
    return ag::convt2d(x, w, b, stride, pad);
  }
};

template <typename T>
Conv<T> make_conv(ParamStore<T>& ps, const std::string& name, Rng& rng, int ci,
                  int co, int k, int stride, int pad, bool bias = true);

template <typename T>
ConvT<T> make_convt(ParamStore<T>& ps, const std::string& name, Rng& rng, int ci,
                    int co, int k, int stride, int pad, bool bias = true);

// down/up-sampling convs used for cross-band transfer: factor 2 uses
// k3 s2 (conv) / k4 s2 (transposed); factor 4 uses k4 s4 both ways.
template <typename T>
Conv<T> make_down_conv(ParamStore<T>& ps, const std::string& name, Rng& rng,
                       int ci, int co, int factor);
template <typename T>
ConvT<T> make_up_conv(ParamStore<T>& ps, const std::string& name, Rng& rng,
                      int ci, int co, int factor);

// First-stage multi-frequency exchange. Every present (src, dst) band pair
// gets a kernel; cross-band transfers resample by the resolution ratio of
// the two bands. Linear (no activation), so it matches the printed
// equations term for term. Weights are public so tests and tools can
// inspect them.
template <typename T>
struct MoConv {
  ChannelSplit::Counts in_c, out_c;
  std::optional<Conv<T>> hh, mm, ll;    // intra
  std::optional<Conv<T>> hm, hl, ml;    // downsampling transfers
  std::optional<ConvT<T>> mh, lh, lm;   // upsampling transfers

  MoConv() = default;
  MoConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
         ChannelSplit split_in, int c_out, ChannelSplit split_out);

  FreqTriple<T> forward(const FreqTriple<T>& x) const;
};

// Two-stage block: MoConv exchange, activation, then per-band stride-2
// convolution with a stride-2 1x1 shortcut from the block input.
template <typename T>
struct MTorbDown {
  MoConv<T> moconv;
  std::optional<Conv<T>> down_h, down_m, down_l;
  std::optional<Conv<T>> sc_h, sc_m, sc_l;

  MTorbDown() = default;
  MTorbDown(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
            ChannelSplit split_in, int c_out, ChannelSplit split_out);

  FreqTriple<T> forward(const FreqTriple<T>& x, Activation act) const;
};

// Mirror block with stride-2 transposed second stage and upsampling shortcut.
template <typename T>
struct MTorbUp {
  MoConv<T> moconv;
  std::optional<ConvT<T>> up_h, up_m, up_l;
  std::optional<ConvT<T>> sc_h, sc_m, sc_l;

  MTorbUp() = default;
  MTorbUp(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
          ChannelSplit split_in, int c_out, ChannelSplit split_out);

  FreqTriple<T> forward(const FreqTriple<T>& x, Activation act) const;
};

// Generalized divisive normalization; `inverse` gives the decoder-side form.
template <typename T>
class Gdn {
 public:
  static constexpr T kBetaMin = T(1e-6);

  Gdn() = default;
  Gdn(ParamStore<T>& ps, const std::string& prefix, int channels);

  ag::Var<T> forward(const ag::Var<T>& x, bool inverse = false) const {
    return ag::gdn(x, g_, t_, inverse, kBetaMin);
  }

  ag::Var<T> gamma_param() const { return g_; }
  ag::Var<T> beta_param() const { return t_; }

 private:
  ag::Var<T> g_, t_;
};

// Per-band GDN over a triple.
template <typename T>
class GdnTriple {
 public:
  GdnTriple() = default;
  GdnTriple(ParamStore<T>& ps, const std::string& prefix, ChannelSplit::Counts c);
  FreqTriple<T> forward(const FreqTriple<T>& x, bool inverse = false) const;

 private:
  std::optional<Gdn<T>> h_, m_, l_;
};

// Kernel geometry for the two-band baseline blocks. Defaults mirror the
// main-path choices; tests shrink kernels to probe degenerate behaviour.
struct OctKernels {
  int k_intra = 3;  // stride-1 convs (odd)
  int k_down = 3;   // stride-2 convs (odd, or even for exact tiling)
  int k_up = 4;     // stride-2 transposed convs (even)

  int pad_intra() const { return (k_intra - 1) / 2; }
  int pad_down() const { return k_down % 2 ? (k_down - 1) / 2 : (k_down - 2) / 2; }
  int pad_up() const { return (k_up - 2) / 2; }
};

// ---- two-frequency baselines (ablation) ----

// Average-pool / interpolation exchange; both bands downsample by 2.
template <typename T>
struct OctConv {
  int ci_h = 0, ci_l = 0, co_h = 0, co_l = 0;
  OctKernels kc;
  std::optional<Conv<T>> hh, ll, hl, lh;

  OctConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
          double alpha_in, int c_out, double alpha_out, OctKernels kc = {});
  BandPair<T> forward(const BandPair<T>& x) const;
};

// Strided-convolution variant; inter-frequency inputs are the intra outputs.
template <typename T>
struct GoConv {
  int ci_h = 0, ci_l = 0, co_h = 0, co_l = 0;
  OctKernels kc;
  std::optional<Conv<T>> hh, ll, hl;
  std::optional<ConvT<T>> lh;

  GoConv(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
         double alpha_in, int c_out, double alpha_out, OctKernels kc = {});
  BandPair<T> forward(const BandPair<T>& x) const;
};

// Two-stage octave residual block: resolution-preserving exchange, then
// stride-2 second stage with shortcut.
template <typename T>
struct Torb {
  int ci_h = 0, ci_l = 0, co_h = 0, co_l = 0;
  OctKernels kc;
  std::optional<Conv<T>> hh, ll, hl;
  std::optional<ConvT<T>> lh;
  std::optional<Conv<T>> second_h, second_l, sc_h, sc_l;

  Torb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
       double alpha_in, int c_out, double alpha_out, OctKernels kc = {});
  BandPair<T> forward(const BandPair<T>& x, Activation act = Activation::none) const;
};

template <typename T>
ag::Var<T> maybe_act(const ag::Var<T>& x, Activation act);

}  // namespace fdsc
