#include "fdsc/autoencoder.hpp"

#include <cmath>

namespace fdsc {

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid = {0.0018, 0.0035, 0.0067,
                                           0.013,  0.025,  0.0483};
  return grid;
}

int lambda_index(double lambda) {
  const auto& g = lambda_grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g[i] - lambda) < 1e-12) return static_cast<int>(i);
  return -1;
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.n = 64;
  c.m = 96;
  c.main_stages = 3;
  c.hyper_stages = 1;
  c.window = 4;
  return c;
}

ModelConfig ModelConfig::paper_low() { return ModelConfig{}; }

ModelConfig ModelConfig::paper_high() {
  ModelConfig c;
  c.n = 320;
  c.m = 320;
  return c;
}

namespace {
bool same_arch(const ModelConfig& a, const ModelConfig& b) {
  return a.n == b.n && a.m == b.m && a.alpha == b.alpha && a.beta == b.beta &&
         a.main_stages == b.main_stages && a.hyper_stages == b.hyper_stages &&
         a.window == b.window;
}
}  // namespace

std::uint8_t ModelConfig::config_id() const {
  if (same_arch(*this, desk())) return 1;
  if (same_arch(*this, paper_low())) return 2;
  if (same_arch(*this, paper_high())) return 3;
  return 0;
}

std::uint8_t ModelConfig::lambda_id() const {
  const int i = lambda_index(lambda);
  return i < 0 ? 0xFF : static_cast<std::uint8_t>(i);
}

void ModelConfig::validate() const {
  check(n > 0 && m > 0, "ModelConfig: N, M must be positive");
  check(main_stages >= 2, "ModelConfig: main_stages >= 2");
  check(hyper_stages >= 1, "ModelConfig: hyper_stages >= 1");
  check(window >= 1, "ModelConfig: window >= 1");
  check(lambda > 0, "ModelConfig: lambda must be positive");
  split().counts(n);
  split().counts(m);
}

LatentGeometry latent_geometry(const ModelConfig& cfg, int padded_h, int padded_w) {
  check(padded_h % cfg.pad_multiple() == 0 && padded_w % cfg.pad_multiple() == 0,
        "latent_geometry: dims must be multiples of " +
            std::to_string(cfg.pad_multiple()));
  const auto yc = cfg.split().counts(cfg.m);
  LatentGeometry g;
  const int base_h = padded_h >> cfg.main_stages;
  const int base_w = padded_w >> cfg.main_stages;
  const int band_c[3] = {yc.high, yc.mid, yc.low};
  for (int b = 0; b < 3; ++b) {
    g.y[b] = {band_c[b], base_h >> b, base_w >> b};
    g.z[b] = {band_c[b], g.y[b].h >> cfg.hyper_stages, g.y[b].w >> cfg.hyper_stages};
    g.psi[b] = {2 * cfg.m, g.y[b].h, g.y[b].w};
  }
  return g;
}

template <typename T>
Tensor<T> pad_replicate(const Tensor<T>& img, int mult) {
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int ph = (h + mult - 1) / mult * mult;
  const int pw = (w + mult - 1) / mult * mult;
  if (ph == h && pw == w) return img;
  Tensor<T> out({c, ph, pw});
  for (int ic = 0; ic < c; ++ic)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        out.at(ic, y, x) = img.at(ic, std::min(y, h - 1), std::min(x, w - 1));
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& img, int h, int w) {
  if (img.dim(1) == h && img.dim(2) == w) return img;
  Tensor<T> out({img.dim(0), h, w});
  for (int ic = 0; ic < img.dim(0); ++ic)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ic, y, x) = img.at(ic, y, x);
  return out;
}

template <typename T>
HyperEncoder<T>::HyperEncoder(ParamStore<T>& ps, const std::string& prefix,
                              Rng& rng, int c, int stages)
    : front(make_conv(ps, prefix + ".front", rng, c, c, 3, 1, 1)) {
  for (int s = 0; s < stages; ++s)
    downs.push_back(make_conv(ps, prefix + ".down" + std::to_string(s), rng, c, c, 3, 2, 1));
}

template <typename T>
ag::Var<T> HyperEncoder<T>::forward(const ag::Var<T>& y) const {
  // abs() front per the hyperprior convention
  auto t = ag::leaky_relu(front(ag::abs_v(y)), static_cast<T>(kLReluSlope));
  for (std::size_t i = 0; i < downs.size(); ++i) {
    t = downs[i](t);
    if (i + 1 < downs.size()) t = ag::leaky_relu(t, static_cast<T>(kLReluSlope));
  }
  return t;
}

template <typename T>
HyperDecoder<T>::HyperDecoder(ParamStore<T>& ps, const std::string& prefix,
                              Rng& rng, int c_in, int c_mid, int c_out, int stages) {
  int c = c_in;
  for (int s = 0; s < stages; ++s) {
    ups.push_back(make_convt(ps, prefix + ".up" + std::to_string(s), rng, c, c_mid, 4, 2, 1));
    c = c_mid;
  }
  tail = make_conv(ps, prefix + ".tail", rng, c, c_out, 3, 1, 1);
}

template <typename T>
ag::Var<T> HyperDecoder<T>::forward(const ag::Var<T>& z) const {
  auto t = z;
  for (const auto& up : ups) t = ag::leaky_relu(up(t), static_cast<T>(kLReluSlope));
  return tail(t);
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.init_seed);
  const ChannelSplit split = cfg_.split();
  const ChannelSplit img_split{0, 0};
  n_counts_ = split.counts(cfg_.n);
  y_counts_ = split.counts(cfg_.m);
  const int S = cfg_.main_stages;
  mid_stage_ = (S + 1) / 2;

  // ---- g_a ----
  ga_in_ = MoConv<T>(params_, "ga.in", rng, 3, img_split, cfg_.n, split);
  ga_gdn_in_ = GdnTriple<T>(params_, "ga.gdn_in", n_counts_);
  for (int s = 0; s < S; ++s) {
    ga_down_.emplace_back(params_, "ga.stage" + std::to_string(s + 1), rng, cfg_.n,
                          split, cfg_.n, split);
    ga_gdn_.emplace_back(params_, "ga.gdn" + std::to_string(s + 1), n_counts_);
  }
  ga_ctsfrb_ = CtsfrbTriple<T>(params_, "ga.ctsfrb", rng, n_counts_, cfg_.ctsfrb_cascaded);
  ga_wam_mid_ = WamTriple<T>(params_, "ga.wam_mid", rng, n_counts_, cfg_.window);
  ga_wam_end_ = WamTriple<T>(params_, "ga.wam_end", rng, n_counts_, cfg_.window);
  ga_out_ = MoConv<T>(params_, "ga.out", rng, cfg_.n, split, cfg_.m, split);

  // ---- g_s (mirror) ----
  gs_in_ = MoConv<T>(params_, "gs.in", rng, cfg_.m, split, cfg_.n, split);
  gs_wam_end_ = WamTriple<T>(params_, "gs.wam_end", rng, n_counts_, cfg_.window);
  gs_wam_mid_ = WamTriple<T>(params_, "gs.wam_mid", rng, n_counts_, cfg_.window);
  gs_ctsfrb_ = CtsfrbTriple<T>(params_, "gs.ctsfrb", rng, n_counts_, cfg_.ctsfrb_cascaded);
  for (int s = 0; s < S; ++s) {
    gs_up_.emplace_back(params_, "gs.stage" + std::to_string(s + 1), rng, cfg_.n,
                        split, cfg_.n, split);
    gs_igdn_.emplace_back(params_, "gs.igdn" + std::to_string(s + 1), n_counts_);
  }
  gs_igdn_out_ = GdnTriple<T>(params_, "gs.igdn_out", n_counts_);
  gs_out_ = MoConv<T>(params_, "gs.out", rng, cfg_.n, split, 3, img_split);

  // ---- hyper codec, AQ heads, FEM per band ----
  const int band_c[3] = {y_counts_.high, y_counts_.mid, y_counts_.low};
  const char* bname[3] = {"h", "m", "l"};
  for (int b = 0; b < 3; ++b) {
    if (!band_c[b]) continue;
    ha_[b].emplace(params_, std::string("ha.") + bname[b], rng, band_c[b],
                   cfg_.hyper_stages);
    hs_[b].emplace(params_, std::string("hs.") + bname[b], rng, band_c[b], cfg_.m,
                   2 * cfg_.m, cfg_.hyper_stages);
    dh_[b].emplace(params_, std::string("aq.") + bname[b], rng, 2 * cfg_.m, band_c[b]);
    fem_[b] = FactorizedModel<T>(params_, std::string("fem.") + bname[b], band_c[b]);
  }

  ctx_ = ContextModel<T>(params_, "ctx", rng, y_counts_, cfg_.m, cfg_.wiring);
}

template <typename T>
FreqTriple<T> Model<T>::analysis(const ag::Var<T>& x) const {
  check(x->val.rank() == 3 && x->val.dim(0) == 3,
        "analysis: input must be (3,h,w), got " + x->val.shape_str());
  check(x->val.dim(1) % cfg_.pad_multiple() == 0 &&
            x->val.dim(2) % cfg_.pad_multiple() == 0,
        "analysis: input dims must be multiples of " +
            std::to_string(cfg_.pad_multiple()) + " (pad upstream)");
  FreqTriple<T> t;
  t.high = x;
  t = ga_gdn_in_.forward(ga_in_.forward(t));
  for (int s = 0; s < cfg_.main_stages; ++s) {
    t = ga_gdn_[s].forward(ga_down_[s].forward(t, Activation::lrelu));
    if (s + 1 == mid_stage_) t = ga_wam_mid_.forward(ga_ctsfrb_.forward(t));
  }
  t = ga_wam_end_.forward(t);
  return ga_out_.forward(t);
}

template <typename T>
ag::Var<T> Model<T>::synthesis(const FreqTriple<T>& y_hat, bool clamp_output) const {
  FreqTriple<T> t = gs_in_.forward(y_hat);
  t = gs_wam_end_.forward(t);
  for (int s = cfg_.main_stages - 1; s >= 0; --s) {
    if (s + 1 == mid_stage_) t = gs_ctsfrb_.forward(gs_wam_mid_.forward(t));
    t = gs_up_[s].forward(gs_igdn_[s].forward(t, true), Activation::lrelu);
  }
  t = gs_igdn_out_.forward(t, true);
  FreqTriple<T> out = gs_out_.forward(t);
  check(out.has_high() && !out.has_mid() && !out.has_low(),
        "synthesis: expected single-band image output");
  return clamp_output ? ag::clamp_st(out.high, T(0), T(1)) : out.high;
}

template <typename T>
FreqTriple<T> Model<T>::hyper_analysis(const FreqTriple<T>& y) const {
  FreqTriple<T> z;
  if (y.high) z.high = ha_[0]->forward(y.high);
  if (y.mid) z.mid = ha_[1]->forward(y.mid);
  if (y.low) z.low = ha_[2]->forward(y.low);
  return z;
}

template <typename T>
FreqTriple<T> Model<T>::hyper_synthesis(const FreqTriple<T>& z_hat) const {
  FreqTriple<T> psi;
  if (z_hat.high) psi.high = hs_[0]->forward(z_hat.high);
  if (z_hat.mid) psi.mid = hs_[1]->forward(z_hat.mid);
  if (z_hat.low) psi.low = hs_[2]->forward(z_hat.low);
  return psi;
}

template <typename T>
FreqTriple<T> Model<T>::predict_delta(const FreqTriple<T>& psi) const {
  FreqTriple<T> d;
  const int band_c[3] = {y_counts_.high, y_counts_.mid, y_counts_.low};
  const ag::Var<T>* in[3] = {&psi.high, &psi.mid, &psi.low};
  ag::Var<T>* out[3] = {&d.high, &d.mid, &d.low};
  for (int b = 0; b < 3; ++b) {
    if (!*in[b]) continue;
    if (cfg_.aq_enabled) {
      *out[b] = dh_[b]->forward(*in[b]);
    } else {
      Tensor<T> ones({band_c[b], (*in[b])->val.dim(1), (*in[b])->val.dim(2)});
      ones.fill(T(1));
      *out[b] = ag::leaf(std::move(ones));
    }
  }
  return d;
}

template <typename T>
void Model<T>::finalize() {
  for (int b = 0; b < 3; ++b) {
    z_rows_[b].clear();
    if (!ha_[b]) continue;
    const int c = fem_[b].channels();
    z_rows_[b].reserve(c);
    for (int ch = 0; ch < c; ++ch) z_rows_[b].push_back(fem_[b].cdf_row(ch));
  }
  finalized_ = true;
}

template <typename T>
const std::vector<CdfRow>& Model<T>::z_rows(Band b) const {
  check(finalized_, "model not finalized: call finalize() before coding");
  return z_rows_[static_cast<int>(b)];
}

template <typename T>
ag::Var<T> band_of(const FreqTriple<T>& t, Band b) {
  switch (b) {
    case Band::high: return t.high;
    case Band::mid: return t.mid;
    default: return t.low;
  }
}

template <typename T>
void set_band(FreqTriple<T>& t, Band b, ag::Var<T> v) {
  switch (b) {
    case Band::high: t.high = std::move(v); break;
    case Band::mid: t.mid = std::move(v); break;
    default: t.low = std::move(v); break;
  }
}

#define FDSC_INSTANTIATE(T)                                      \
  template Tensor<T> pad_replicate<T>(const Tensor<T>&, int);    \
  template Tensor<T> crop<T>(const Tensor<T>&, int, int);        \
  template struct HyperEncoder<T>;                               \
  template struct HyperDecoder<T>;                               \
  template class Model<T>;                                       \
  template ag::Var<T> band_of<T>(const FreqTriple<T>&, Band);    \
  template void set_band<T>(FreqTriple<T>&, Band, ag::Var<T>);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
