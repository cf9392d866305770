#pragma once

#include <array>

#include "fdsc/context.hpp"
#include "fdsc/fusion.hpp"
#include "fdsc/quant.hpp"

namespace fdsc {

// the six rate points used for MSE-optimized models
const std::vector<double>& lambda_grid();
int lambda_index(double lambda);  // -1 when not on the grid

struct ModelConfig {
  int n = 192;          // base channel count
  int m = 192;          // latent channel count
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  int main_stages = 4;  // stride-2 MToRB stages
  int hyper_stages = 2;
  int window = 8;
  double lambda = 0.013;
  bool aq_enabled = true;      // false freezes delta = 1 (ablation)
  ContextWiring wiring;        // cross-band context ablation
  bool ctsfrb_cascaded = true;
  std::uint64_t init_seed = 1;
  int max_dim = 8192;          // encoder input size cap

  static ModelConfig desk();        // n=64, m=96, stages 3/1, window 4
  static ModelConfig paper_low();   // 192
  static ModelConfig paper_high();  // 320

  // input padding granularity: all band and hyper resolutions integral
  int pad_multiple() const { return 1 << (main_stages + hyper_stages + 2); }
  ChannelSplit split() const { return {alpha, beta}; }
  std::uint8_t config_id() const;  // 1 desk, 2 paper_low, 3 paper_high, 0 custom
  std::uint8_t lambda_id() const;  // index in lambda_grid, 0xFF custom
  void validate() const;
};

struct BandShape {
  int c = 0, h = 0, w = 0;
  std::int64_t numel() const { return static_cast<std::int64_t>(c) * h * w; }
};

struct LatentGeometry {
  std::array<BandShape, 3> y, z, psi;  // indexed by Band
};

LatentGeometry latent_geometry(const ModelConfig& cfg, int padded_h, int padded_w);

// replicate-pad (3,h,w) up to multiples of `mult`
template <typename T>
Tensor<T> pad_replicate(const Tensor<T>& img, int mult);
template <typename T>
Tensor<T> crop(const Tensor<T>& img, int h, int w);

template <typename T>
struct HyperEncoder {
  Conv<T> front;
  std::vector<Conv<T>> downs;
  HyperEncoder() = default;
  HyperEncoder(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c,
               int stages);
  ag::Var<T> forward(const ag::Var<T>& y) const;
};

template <typename T>
struct HyperDecoder {
  std::vector<ConvT<T>> ups;
  Conv<T> tail;
  HyperDecoder() = default;
  HyperDecoder(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c_in,
               int c_mid, int c_out, int stages);
  ag::Var<T> forward(const ag::Var<T>& z) const;
};

// Full codec network: main analysis/synthesis over frequency triples, a
// per-band hyper codec, per-band quantization-step heads, the cross-band
// context model, and per-band factorized hyper priors.
template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  FreqTriple<T> analysis(const ag::Var<T>& x) const;
  ag::Var<T> synthesis(const FreqTriple<T>& y_hat, bool clamp_output = true) const;
  FreqTriple<T> hyper_analysis(const FreqTriple<T>& y) const;
  FreqTriple<T> hyper_synthesis(const FreqTriple<T>& z_hat) const;

  // per-band quantization step from the hyperprior features; unit steps when
  // adaptive quantization is disabled
  FreqTriple<T> predict_delta(const FreqTriple<T>& psi) const;

  const ContextModel<T>& ctx() const { return ctx_; }
  const FactorizedModel<T>& fem(Band b) const { return fem_[static_cast<int>(b)]; }

  ChannelSplit::Counts y_counts() const { return y_counts_; }

  // builds the static per-channel coding rows for the hyper latents;
  // required before encode/decode
  void finalize();
  bool finalized() const { return finalized_; }
  const std::vector<CdfRow>& z_rows(Band b) const;

  // mark weights changed (training) so stale tables cannot be used
  void invalidate() { finalized_ = false; }

 private:
  ModelConfig cfg_;
  ParamStore<T> params_;
  ChannelSplit::Counts n_counts_, y_counts_;
  int mid_stage_ = 0;

  // analysis path
  MoConv<T> ga_in_;
  GdnTriple<T> ga_gdn_in_;
  std::vector<MTorbDown<T>> ga_down_;
  std::vector<GdnTriple<T>> ga_gdn_;
  CtsfrbTriple<T> ga_ctsfrb_;
  WamTriple<T> ga_wam_mid_, ga_wam_end_;
  MoConv<T> ga_out_;

  // synthesis path (mirror)
  MoConv<T> gs_in_;
  WamTriple<T> gs_wam_end_, gs_wam_mid_;
  CtsfrbTriple<T> gs_ctsfrb_;
  std::vector<MTorbUp<T>> gs_up_;
  std::vector<GdnTriple<T>> gs_igdn_;
  GdnTriple<T> gs_igdn_out_;
  MoConv<T> gs_out_;

  // hyper codec + AQ heads per band
  std::optional<HyperEncoder<T>> ha_[3];
  std::optional<HyperDecoder<T>> hs_[3];
  std::optional<DeltaHead<T>> dh_[3];

  ContextModel<T> ctx_;
  FactorizedModel<T> fem_[3];

  bool finalized_ = false;
  std::vector<CdfRow> z_rows_[3];
};

template <typename T>
ag::Var<T> band_of(const FreqTriple<T>& t, Band b);
template <typename T>
void set_band(FreqTriple<T>& t, Band b, ag::Var<T> v);

}  // namespace fdsc
