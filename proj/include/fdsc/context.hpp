#pragma once

#include "fdsc/entropy.hpp"
#include "fdsc/freq_blocks.hpp"

namespace fdsc {

enum class Band { high = 0, mid = 1, low = 2 };
enum class CtxStage { anchors = 1, non_anchors = 2 };

// checkerboard: anchors are positions with (y + x) even
template <typename T>
Tensor<T> checkerboard_mask(int c, int h, int w, bool anchors);

// Ablation wiring of the cross-band interaction (Fig.-11-style cases):
// case 1 = h_to_l only, case 2 adds m_to_l, case 3 adds h_to_m. Disabled
// paths contribute zero maps so the parameter networks keep their shape.
struct ContextWiring {
  bool h_to_l = true;
  bool m_to_l = true;
  bool h_to_m = true;
};

// stride-2 residual block used by the cross-band context paths:
// conv3x3 s2 -> LReLU -> conv3x3 s1, with a 1x1 s2 skip
template <typename T>
struct DownRb {
  Conv<T> c1, c2, sc;
  DownRb() = default;
  DownRb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int ci, int co);
  ag::Var<T> forward(const ag::Var<T>& x) const;
};

// three 1x1 conv layers mapping concatenated context features to (mu, sigma)
template <typename T>
struct EpNet {
  Conv<T> c1, c2, c3;
  int out_channels = 0;  // per-band latent channels; net emits 2x of these
  EpNet() = default;
  EpNet(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int cin, int hidden,
        int band_channels);
  // returns (mu, sigma), sigma clamped to >= kSigmaMin
  std::pair<ag::Var<T>, ag::Var<T>> forward(const std::vector<ag::Var<T>>& inputs) const;
};

// Intra-band multi-stage (two-stage checkerboard) context and the
// cross-frequency interaction modules feeding P_h / P_m / P_l.
template <typename T>
class ContextModel {
 public:
  ContextModel() = default;
  ContextModel(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
               ChannelSplit::Counts y_channels, int m_total, ContextWiring wiring);

  // Intra context: stage 1 -> zero map; stage 2 -> 5x5 conv over the
  // anchor-masked (already decoded) band.
  ag::Var<T> intra(const ag::Var<T>& y_band_masked_source, Band band,
                   CtxStage stage) const;

  // Cross-band contexts consume the fully decoded source band and emit
  // features at the destination band's resolution. Disabled wiring gives a
  // zero map of the right shape.
  ag::Var<T> cross_h_to_l(const ag::Var<T>& y_hat_h) const;
  ag::Var<T> cross_h_to_m(const ag::Var<T>& y_hat_h) const;
  ag::Var<T> cross_m_to_l(const ag::Var<T>& y_hat_m) const;

  // Entropy parameters per band; all feature inputs at the band resolution.
  std::pair<ag::Var<T>, ag::Var<T>> params_high(const ag::Var<T>& intra_ctx,
                                                const ag::Var<T>& psi) const;
  std::pair<ag::Var<T>, ag::Var<T>> params_mid(const ag::Var<T>& intra_ctx,
                                               const ag::Var<T>& ctx_hm,
                                               const ag::Var<T>& psi) const;
  std::pair<ag::Var<T>, ag::Var<T>> params_low(const ag::Var<T>& intra_ctx,
                                               const ag::Var<T>& ctx_hl,
                                               const ag::Var<T>& ctx_ml,
                                               const ag::Var<T>& psi) const;

  int ctx_channels() const { return ctx_ch_; }
  const ContextWiring& wiring() const { return wiring_; }

 private:
  ContextWiring wiring_;
  int ctx_ch_ = 0;  // context feature width (2M)
  ChannelSplit::Counts yc_;
  std::optional<Conv<T>> intra_h_, intra_m_, intra_l_;  // 5x5 masked convs
  std::optional<DownRb<T>> hl1_, hl2_;                  // h->l: two stride-2 RBs
  std::optional<DownRb<T>> hm_, ml_;                    // one stride-2 RB each
  std::optional<EpNet<T>> p_h_, p_m_, p_l_;
};

}  // namespace fdsc
