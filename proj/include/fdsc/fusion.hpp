#pragma once

#include "fdsc/freq_blocks.hpp"

namespace fdsc {

// conv3 -> LReLU -> conv3 with identity skip
template <typename T>
struct ResidualBlock {
  Conv<T> c1, c2;

  ResidualBlock() = default;
  ResidualBlock(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c);
  ag::Var<T> forward(const ag::Var<T>& x) const;
};

// Triple-scale feature fusion residual block: 3x3/5x5/7x7 branches, two 1x1
// fusion stages (each followed by GDN), per-branch residual refinement,
// input skip.
template <typename T>
struct Tsfrb {
  Conv<T> branch3, branch5, branch7;
  Conv<T> fuse1;
  Gdn<T> norm1;
  ResidualBlock<T> rb[3];
  Conv<T> post[3];
  Conv<T> fuse2;
  Gdn<T> norm2;

  Tsfrb() = default;
  Tsfrb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c);
  // branch/fusion stack without the input skip
  ag::Var<T> core(const ag::Var<T>& x) const;
  ag::Var<T> forward(const ag::Var<T>& x) const;
};

// Two TSFRBs in cascade. The second block's skip connects from the cascade
// input, so zero weights reduce the whole block to the identity;
// `cascaded=false` drops to a single TSFRB for the ablation configuration.
template <typename T>
struct Ctsfrb {
  bool cascaded = true;
  Tsfrb<T> t1;
  std::optional<Tsfrb<T>> t2;

  Ctsfrb() = default;
  Ctsfrb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c,
         bool cascaded_ = true);
  ag::Var<T> forward(const ag::Var<T>& x) const;
};

// Window-based attention: single head, non-overlapping windows, residual.
// The effective window per tensor is the largest divisor of the spatial dims
// among {window, window/2, ..., 1}, so small bands degrade gracefully
// instead of violating the divisibility contract.
template <typename T>
struct Wam {
  int window = 8;
  Conv<T> q, k, v, proj;

  Wam() = default;
  Wam(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c, int window_);
  ag::Var<T> forward(const ag::Var<T>& x) const;

  static int effective_window(int window, int h, int w);
};

// per-band wrappers
template <typename T>
struct CtsfrbTriple {
  std::optional<Ctsfrb<T>> h, m, l;
  CtsfrbTriple() = default;
  CtsfrbTriple(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
               ChannelSplit::Counts c, bool cascaded = true);
  FreqTriple<T> forward(const FreqTriple<T>& x) const;
};

template <typename T>
struct WamTriple {
  std::optional<Wam<T>> h, m, l;
  WamTriple() = default;
  WamTriple(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
            ChannelSplit::Counts c, int window);
  FreqTriple<T> forward(const FreqTriple<T>& x) const;
};

}  // namespace fdsc
