#include "fdsc/codec.hpp"

#include <cmath>

namespace fdsc {

namespace {

// stream ids: 0..2 = z H/M/L, 3..5 = y H/M/L
class SymbolCoder {
 public:
  virtual ~SymbolCoder() = default;
  virtual int transfer(int stream, const CdfRow& row, int idx_proposed) = 0;
};

class EncodeCoder : public SymbolCoder {
 public:
  int transfer(int stream, const CdfRow& row, int idx) override {
    enc[stream].encode_symbol(row, idx);
    return idx;
  }
  std::array<RangeEncoder, 6> enc;
};

class DecodeCoder : public SymbolCoder {
 public:
  explicit DecodeCoder(const Container& c) {
    for (int i = 0; i < 6; ++i)
      dec.emplace_back(c.streams[i].data(), c.streams[i].size());
  }
  int transfer(int stream, const CdfRow& row, int) override {
    return dec[stream].decode_symbol(row);
  }
  std::vector<RangeDecoder> dec;
};

class DirectCoder : public SymbolCoder {
 public:
  int transfer(int, const CdfRow&, int idx) override { return idx; }
};

double gaussian_interval_mass(double centered, double sigma, double delta) {
  return std::max(kPMin, normal_cdf((centered + delta / 2) / sigma) -
                             normal_cdf((centered - delta / 2) / sigma));
}

// Core staged pipeline shared by encode (y != nullptr, EncodeCoder),
// decode (y == nullptr, DecodeCoder) and the direct quantized pass
// (y != nullptr, DirectCoder). Identical code path keeps encoder- and
// decoder-side y_hat bit-identical.
template <typename T>
CodedLatents<T> code_latents(const Model<T>& model, const FreqTriple<T>* y,
                             const LatentGeometry& geom, SymbolCoder& coder) {
  check(model.finalized(), "model not finalized: call finalize() before coding");
  CodedLatents<T> out;

  // ---- hyper latents: unit-step rounding against static per-channel rows
  FreqTriple<T> z_enc;
  if (y) z_enc = model.hyper_analysis(*y);
  for (int b = 0; b < 3; ++b) {
    const BandShape zs = geom.z[b];
    if (!zs.c) continue;
    const auto& rows = model.z_rows(static_cast<Band>(b));
    const ag::Var<T> zsrc = y ? band_of(z_enc, static_cast<Band>(b)) : nullptr;
    if (zsrc)
      check(zsrc->val.dims() == std::vector<int>({zs.c, zs.h, zs.w}),
            "codec: hyper latent geometry mismatch");
    Tensor<T> zhat({zs.c, zs.h, zs.w});
    auto& sym = out.symbols[b];
    sym.reserve(static_cast<std::size_t>(zs.numel()));
    const std::int64_t plane = static_cast<std::int64_t>(zs.h) * zs.w;
    const auto& fem = model.fem(static_cast<Band>(b));
    for (int ch = 0; ch < zs.c; ++ch) {
      const CdfRow& row = rows[ch];
      for (std::int64_t i = 0; i < plane; ++i) {
        int prop = 0;
        if (zsrc)
          prop = row.clamp_symbol(
              std::llround(static_cast<double>(zsrc->val[ch * plane + i])));
        const int idx = coder.transfer(b, row, prop);
        const std::int64_t k = row.symbol(idx);
        zhat[ch * plane + i] = static_cast<T>(k);
        sym.push_back(static_cast<std::int32_t>(k));
        const double kd = static_cast<double>(k);
        out.z_bits[b] -= std::log2(
            std::max(kPMin, fem.cdf(ch, kd + 0.5) - fem.cdf(ch, kd - 0.5)));
      }
    }
    set_band(out.z_hat, static_cast<Band>(b), ag::leaf(std::move(zhat)));
  }

  // ---- hyperprior features and per-band quantization steps
  const FreqTriple<T> psi = model.hyper_synthesis(out.z_hat);
  const FreqTriple<T> delta = model.predict_delta(psi);

  // ---- main latents: band order H -> M -> L, anchors then non-anchors
  for (int b = 0; b < 3; ++b) {
    const BandShape ys = geom.y[b];
    if (!ys.c) continue;
    const Band band = static_cast<Band>(b);
    const ag::Var<T> psi_b = band_of(psi, band);
    const ag::Var<T> delta_b = band_of(delta, band);
    const ag::Var<T> ysrc = y ? band_of(*y, band) : nullptr;

    {
      double mean = 0;
      for (std::int64_t i = 0; i < delta_b->val.numel(); ++i)
        mean += static_cast<double>(delta_b->val[i]);
      out.mean_delta[b] = mean / static_cast<double>(delta_b->val.numel());
    }

    // cross contexts from already decoded bands
    ag::Var<T> ctx_hm, ctx_hl, ctx_ml;
    if (band == Band::mid && out.y_hat.high)
      ctx_hm = model.ctx().cross_h_to_m(out.y_hat.high);
    if (band == Band::low) {
      if (out.y_hat.high) ctx_hl = model.ctx().cross_h_to_l(out.y_hat.high);
      if (out.y_hat.mid) ctx_ml = model.ctx().cross_m_to_l(out.y_hat.mid);
    }

    Tensor<T> yhat({ys.c, ys.h, ys.w});
    auto& sym = out.symbols[3 + b];
    sym.reserve(static_cast<std::size_t>(ys.numel()));
    const std::int64_t plane = static_cast<std::int64_t>(ys.h) * ys.w;

    for (const CtxStage stage : {CtxStage::anchors, CtxStage::non_anchors}) {
      const ag::Var<T> intra =
          model.ctx().intra(ag::leaf(yhat), band, stage);
      std::pair<ag::Var<T>, ag::Var<T>> ms;
      switch (band) {
        case Band::high: ms = model.ctx().params_high(intra, psi_b); break;
        case Band::mid: ms = model.ctx().params_mid(intra, ctx_hm, psi_b); break;
        case Band::low: ms = model.ctx().params_low(intra, ctx_hl, ctx_ml, psi_b); break;
      }
      const Tensor<T>& mu = ms.first->val;
      const Tensor<T>& sigma = ms.second->val;
      const bool want_anchor = stage == CtxStage::anchors;
      for (int ch = 0; ch < ys.c; ++ch) {
        for (int yy = 0; yy < ys.h; ++yy) {
          for (int xx = 0; xx < ys.w; ++xx) {
            if ((((yy + xx) % 2) == 0) != want_anchor) continue;
            const std::int64_t e = ch * plane + static_cast<std::int64_t>(yy) * ys.w + xx;
            const double d = static_cast<double>(delta_b->val[e]);
            const double mu_e = static_cast<double>(mu[e]);
            const double s = snap_scale(static_cast<double>(sigma[e]) / d);
            const CdfRow row = conditional_cdf_row(mu_e / d, s);
            int prop = 0;
            if (ysrc)
              prop = row.clamp_symbol(
                  std::llround(static_cast<double>(ysrc->val[e]) / d));
            const int idx = coder.transfer(3 + b, row, prop);
            const std::int64_t k = row.symbol(idx);
            yhat[e] = static_cast<T>(d * static_cast<double>(k));
            sym.push_back(static_cast<std::int32_t>(k));
            out.y_bits[b] -= std::log2(gaussian_interval_mass(
                static_cast<double>(yhat[e]) - mu_e, static_cast<double>(sigma[e]), d));
          }
        }
      }
    }
    set_band(out.y_hat, band, ag::leaf(std::move(yhat)));
  }
  return out;
}

template <typename T>
Tensor<T> padded_input(const Model<T>& model, const Tensor<T>& img) {
  check(img.rank() == 3 && img.dim(0) == 3, "codec: image must be (3,h,w)");
  check(img.dim(1) >= 1 && img.dim(2) >= 1, "codec: empty image");
  check(img.dim(1) <= model.config().max_dim && img.dim(2) <= model.config().max_dim,
        "codec: image exceeds configured maximum dimension " +
            std::to_string(model.config().max_dim));
  return pad_replicate(img, model.config().pad_multiple());
}

}  // namespace

template <typename T>
EncodeResult<T> encode_image(const Model<T>& model, const Tensor<T>& img,
                             bool with_reconstruction) {
  const Tensor<T> padded = padded_input(model, img);
  const auto x = ag::leaf(padded);
  const FreqTriple<T> y = model.analysis(x);
  const LatentGeometry geom = latent_geometry(model.config(), padded.dim(1), padded.dim(2));

  EncodeCoder coder;
  EncodeResult<T> out;
  out.latents = code_latents(model, &y, geom, coder);

  out.container.config_id = model.config().config_id();
  out.container.lambda_idx = model.config().lambda_id();
  out.container.orig_w = static_cast<std::uint32_t>(img.dim(2));
  out.container.orig_h = static_cast<std::uint32_t>(img.dim(1));
  out.container.padded_w = static_cast<std::uint32_t>(padded.dim(2));
  out.container.padded_h = static_cast<std::uint32_t>(padded.dim(1));
  for (int i = 0; i < 6; ++i) out.container.streams[i] = coder.enc[i].finish();

  if (with_reconstruction) {
    const auto xhat = model.synthesis(out.latents.y_hat);
    out.reconstruction = crop(xhat->val, img.dim(1), img.dim(2));
  }
  return out;
}

template <typename T>
Tensor<T> decode_image(const Model<T>& model, const Container& c) {
  if (c.config_id != model.config().config_id() ||
      c.lambda_idx != model.config().lambda_id())
    throw DecodeError(
        "header mismatch: container (config-id " + std::to_string(c.config_id) +
        ", lambda-index " + std::to_string(c.lambda_idx) + ") vs model (config-id " +
        std::to_string(model.config().config_id()) + ", lambda-index " +
        std::to_string(model.config().lambda_id()) + ")");
  const int mult = model.config().pad_multiple();
  if (c.padded_w == 0 || c.padded_h == 0 || c.padded_w % mult || c.padded_h % mult ||
      c.orig_w > c.padded_w || c.orig_h > c.padded_h)
    throw DecodeError("header mismatch: inconsistent geometry");
  const LatentGeometry geom = latent_geometry(
      model.config(), static_cast<int>(c.padded_h), static_cast<int>(c.padded_w));
  DecodeCoder coder(c);
  CodedLatents<T> latents;
  try {
    latents = code_latents<T>(model, nullptr, geom, coder);
  } catch (const TruncatedStream&) {
    throw DecodeError("truncated stream: substream exhausted mid-decode");
  }
  const auto xhat = model.synthesis(latents.y_hat);
  return crop(xhat->val, static_cast<int>(c.orig_h), static_cast<int>(c.orig_w));
}

template <typename T>
DirectResult<T> direct_forward(const Model<T>& model, const Tensor<T>& img) {
  const Tensor<T> padded = padded_input(model, img);
  const auto x = ag::leaf(padded);
  const FreqTriple<T> y = model.analysis(x);
  const LatentGeometry geom = latent_geometry(model.config(), padded.dim(1), padded.dim(2));
  DirectCoder coder;
  DirectResult<T> out;
  out.latents = code_latents(model, &y, geom, coder);
  const auto xhat = model.synthesis(out.latents.y_hat);
  out.reconstruction = crop(xhat->val, img.dim(1), img.dim(2));
  return out;
}

#define FDSC_INSTANTIATE(T)                                                          \
  template struct CodedLatents<T>;                                                   \
  template EncodeResult<T> encode_image<T>(const Model<T>&, const Tensor<T>&, bool); \
  template Tensor<T> decode_image<T>(const Model<T>&, const Container&);             \
  template DirectResult<T> direct_forward<T>(const Model<T>&, const Tensor<T>&);

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
