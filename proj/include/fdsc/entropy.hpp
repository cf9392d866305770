#pragma once

#include <cstdint>

#include "fdsc/params.hpp"

namespace fdsc {

inline constexpr double kSigmaMin = 0.11;  // lower clamp on predicted scales
inline constexpr double kPMin = 1e-9;      // likelihood floor
inline constexpr double kTailMass = 1e-9;  // per-side tail cut for CDF tables
inline constexpr int kCdfPrecision = 16;   // integer frequencies sum to 2^16
inline constexpr int kScaleTableSize = 64;
inline constexpr double kScaleTableMax = 256.0;

double normal_cdf(double x);

// 64 log-spaced scales spanning [kSigmaMin, kScaleTableMax]
const std::vector<double>& scale_table();
// smallest table entry >= s (clamped to the table ends)
double snap_scale(double s);

// One coder row: symbols k in [kmin, kmin + size) with cumulative integer
// frequencies cum[0]=0 .. cum[size]=2^16, every width >= 1.
struct CdfRow {
  std::int32_t kmin = 0;
  std::vector<std::uint32_t> cum;

  int size() const { return static_cast<int>(cum.size()) - 1; }
  int clamp_symbol(std::int64_t k) const {
    if (k < kmin) return 0;
    if (k >= kmin + size()) return size() - 1;
    return static_cast<int>(k - kmin);
  }
  // index -> symbol value
  std::int64_t symbol(int idx) const { return kmin + idx; }
  // probability of row index as a fraction of 2^16
  double prob(int idx) const {
    return static_cast<double>(cum[idx + 1] - cum[idx]) /
           static_cast<double>(1u << kCdfPrecision);
  }
};

// Deterministically quantize probabilities (already positive) to integer
// cumulative frequencies summing to exactly 2^16 with every symbol >= 1.
CdfRow quantize_probs(std::int32_t kmin, const std::vector<double>& probs);

// Conditional coding row for unit-grid symbols k with effective parameters
// m = mu/delta and s = sigma/delta (s is snapped to the scale table):
// P(k) = Phi((k + 1/2 - m)/s) - Phi((k - 1/2 - m)/s).
CdfRow conditional_cdf_row(double m, double s_snapped);

// Fully factorized per-channel density for hyper latents: a K=4-layer
// monotone univariate CDF (widths 1-3-3-3-1), softplus-reparameterized
// weights and tanh gates. Channel c of the input uses parameter row c.
template <typename T>
class FactorizedModel {
 public:
  static constexpr int kLayers = 4;
  static constexpr int kWidth = 3;

  FactorizedModel() = default;
  FactorizedModel(ParamStore<T>& ps, const std::string& prefix, int channels,
                  double init_scale = 4.0);

  int channels() const { return channels_; }

  // CDF value F(x) for channel ch, plain evaluation (no autograd)
  double cdf(int ch, double x) const;

  // p(z) = F(z + 1/2) - F(z - 1/2) elementwise, floored at kPMin; gradients
  // flow to z and all parameters.
  ag::Var<T> likelihood(const ag::Var<T>& z) const;

  // quantile via bisection on cdf()
  double quantile(int ch, double p) const;
  double median(int ch) const { return quantile(ch, 0.5); }

  // static coding row for one channel, support cut at kTailMass
  CdfRow cdf_row(int ch) const;

 private:
  int channels_ = 0;
  // per layer: H (C, d_out, d_in), b (C, d_out), gate a (C, d_out) except last
  ag::Var<T> h_[kLayers], b_[kLayers], a_[kLayers - 1];

  template <typename Acc>
  void eval_chain(int ch, double x, Acc&& acc) const;
};

// sum over elements of -log2(p) for a plain tensor of probabilities
template <typename T>
double neg_log2_sum(const Tensor<T>& p);

// autograd rate node: -sum(log2(p))
template <typename T>
ag::Var<T> rate_bits_node(const ag::Var<T>& p);

}  // namespace fdsc
