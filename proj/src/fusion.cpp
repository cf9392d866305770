#include "fdsc/fusion.hpp"

namespace fdsc {

template <typename T>
ResidualBlock<T>::ResidualBlock(ParamStore<T>& ps, const std::string& prefix,
                                Rng& rng, int c)
    : c1(make_conv(ps, prefix + ".c1", rng, c, c, 3, 1, 1)),
      c2(make_conv(ps, prefix + ".c2", rng, c, c, 3, 1, 1)) {}

template <typename T>
ag::Var<T> ResidualBlock<T>::forward(const ag::Var<T>& x) const {
  return ag::add(x, c2(ag::leaky_relu(c1(x), static_cast<T>(kLReluSlope))));
}

template <typename T>
Tsfrb<T>::Tsfrb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c)
    : branch3(make_conv(ps, prefix + ".b3", rng, c, c, 3, 1, 1)),
      branch5(make_conv(ps, prefix + ".b5", rng, c, c, 5, 1, 2)),
      branch7(make_conv(ps, prefix + ".b7", rng, c, c, 7, 1, 3)),
      fuse1(make_conv(ps, prefix + ".fuse1", rng, 3 * c, c, 1, 1, 0)),
      norm1(ps, prefix + ".gdn1", c),
      rb{ResidualBlock<T>(ps, prefix + ".rb0", rng, c),
         ResidualBlock<T>(ps, prefix + ".rb1", rng, c),
         ResidualBlock<T>(ps, prefix + ".rb2", rng, c)},
      post{make_conv(ps, prefix + ".post0", rng, c, c, 3, 1, 1),
           make_conv(ps, prefix + ".post1", rng, c, c, 3, 1, 1),
           make_conv(ps, prefix + ".post2", rng, c, c, 3, 1, 1)},
      fuse2(make_conv(ps, prefix + ".fuse2", rng, 3 * c, c, 1, 1, 0)),
      norm2(ps, prefix + ".gdn2", c) {}

template <typename T>
ag::Var<T> Tsfrb<T>::core(const ag::Var<T>& x) const {
  check(x->val.dim(0) == fuse1.w->val.dim(1) / 3,
        "Tsfrb: channel mismatch, got " + x->val.shape_str());
  const T slope = static_cast<T>(kLReluSlope);
  auto b1 = ag::leaky_relu(branch3(x), slope);
  auto b2 = ag::leaky_relu(branch5(x), slope);
  auto b3 = ag::leaky_relu(branch7(x), slope);
  auto fused = norm1.forward(fuse1(ag::concat_c<T>({b1, b2, b3})));
  std::vector<ag::Var<T>> refined;
  for (int i = 0; i < 3; ++i)
    refined.push_back(ag::leaky_relu(post[i](rb[i].forward(fused)), slope));
  return norm2.forward(fuse2(ag::concat_c<T>(refined)));
}

template <typename T>
ag::Var<T> Tsfrb<T>::forward(const ag::Var<T>& x) const {
  return ag::add(x, core(x));
}

template <typename T>
Ctsfrb<T>::Ctsfrb(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c,
                  bool cascaded_)
    : cascaded(cascaded_), t1(ps, prefix + ".t1", rng, c) {
  if (cascaded) t2.emplace(ps, prefix + ".t2", rng, c);
}

template <typename T>
ag::Var<T> Ctsfrb<T>::forward(const ag::Var<T>& x) const {
  if (!cascaded) return t1.forward(x);
  return ag::add(x, t2->core(t1.forward(x)));
}

template <typename T>
Wam<T>::Wam(ParamStore<T>& ps, const std::string& prefix, Rng& rng, int c,
            int window_)
    : window(window_),
      q(make_conv(ps, prefix + ".q", rng, c, c, 1, 1, 0)),
      k(make_conv(ps, prefix + ".k", rng, c, c, 1, 1, 0)),
      v(make_conv(ps, prefix + ".v", rng, c, c, 1, 1, 0)),
      proj(make_conv(ps, prefix + ".proj", rng, c, c, 1, 1, 0)) {}

template <typename T>
int Wam<T>::effective_window(int window, int h, int w) {
  int win = window;
  while (win > 1 && (h % win || w % win)) win /= 2;
  return std::max(win, 1);
}

template <typename T>
ag::Var<T> Wam<T>::forward(const ag::Var<T>& x) const {
  const int win = effective_window(window, x->val.dim(1), x->val.dim(2));
  check(x->val.dim(1) % win == 0 && x->val.dim(2) % win == 0,
        "Wam: dims not divisible by window");
  auto att = ag::window_attention(q(x), k(x), v(x), win);
  return ag::add(x, proj(att));
}

template <typename T>
CtsfrbTriple<T>::CtsfrbTriple(ParamStore<T>& ps, const std::string& prefix,
                              Rng& rng, ChannelSplit::Counts c, bool cascaded) {
  if (c.high) h.emplace(ps, prefix + ".h", rng, c.high, cascaded);
  if (c.mid) m.emplace(ps, prefix + ".m", rng, c.mid, cascaded);
  if (c.low) l.emplace(ps, prefix + ".l", rng, c.low, cascaded);
}

template <typename T>
FreqTriple<T> CtsfrbTriple<T>::forward(const FreqTriple<T>& x) const {
  FreqTriple<T> y;
  if (x.high) y.high = h->forward(x.high);
  if (x.mid) y.mid = m->forward(x.mid);
  if (x.low) y.low = l->forward(x.low);
  return y;
}

template <typename T>
WamTriple<T>::WamTriple(ParamStore<T>& ps, const std::string& prefix, Rng& rng,
                        ChannelSplit::Counts c, int window) {
  if (c.high) h.emplace(ps, prefix + ".h", rng, c.high, window);
  if (c.mid) m.emplace(ps, prefix + ".m", rng, c.mid, window);
  if (c.low) l.emplace(ps, prefix + ".l", rng, c.low, window);
}

template <typename T>
FreqTriple<T> WamTriple<T>::forward(const FreqTriple<T>& x) const {
  FreqTriple<T> y;
  if (x.high) y.high = h->forward(x.high);
  if (x.mid) y.mid = m->forward(x.mid);
  if (x.low) y.low = l->forward(x.low);
  return y;
}

#define FDSC_INSTANTIATE(T)          \
  template struct ResidualBlock<T>;  \
  template struct Tsfrb<T>;          \
  template struct Ctsfrb<T>;         \
  template struct Wam<T>;            \
  template struct CtsfrbTriple<T>;   \
  template struct WamTriple<T>;

FDSC_INSTANTIATE(float)
FDSC_INSTANTIATE(double)
#undef FDSC_INSTANTIATE

}  // namespace fdsc
