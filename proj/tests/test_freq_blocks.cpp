#include "doctest.h"
#include "fdsc/freq_blocks.hpp"
#include "test_util.hpp"

using namespace fdsc;
namespace ag = fdsc::ag;
using testutil::max_abs_diff;
using testutil::naive_conv;
using testutil::naive_convt;
using testutil::naive_pool;
using testutil::naive_up;
using testutil::rand_t;
using testutil::tadd;

namespace {

using D = double;

FreqTriple<D> rand_triple(Rng& rng, ChannelSplit::Counts c, int r) {
  FreqTriple<D> x;
  if (c.high) x.high = ag::leaf(rand_t(rng, {c.high, r, r}));
  if (c.mid) x.mid = ag::leaf(rand_t(rng, {c.mid, r / 2, r / 2}));
  if (c.low) x.low = ag::leaf(rand_t(rng, {c.low, r / 4, r / 4}));
  return x;
}

Tensor<D> apply_conv(const Conv<D>& c, const Tensor<D>& x) {
  Tensor<D> b;
  return naive_conv(x, c.w->val, c.b ? &c.b->val : nullptr, c.stride, c.pad);
}
Tensor<D> apply_convt(const ConvT<D>& c, const Tensor<D>& x) {
  return naive_convt(x, c.w->val, c.b ? &c.b->val : nullptr, c.stride, c.pad);
}

// straight-line transcription of the three-band first-stage exchange
struct MoConvOracle {
  const MoConv<D>& m;
  Tensor<D> yh, ym, yl;
  MoConvOracle(const MoConv<D>& block, const FreqTriple<D>& x) : m(block) {
    if (m.out_c.high) {
      yh = apply_conv(*m.hh, x.high->val);
      if (m.mh) yh = tadd(yh, apply_convt(*m.mh, x.mid->val));
      if (m.lh) yh = tadd(yh, apply_convt(*m.lh, x.low->val));
    }
    if (m.out_c.mid) {
      ym = apply_conv(*m.mm, x.mid->val);
      if (m.hm) ym = tadd(ym, apply_conv(*m.hm, x.high->val));
      if (m.lm) ym = tadd(ym, apply_convt(*m.lm, x.low->val));
    }
    if (m.out_c.low) {
      yl = apply_conv(*m.ll, x.low->val);
      if (m.hl) yl = tadd(yl, apply_conv(*m.hl, x.high->val));
      if (m.ml) yl = tadd(yl, apply_conv(*m.ml, x.mid->val));
    }
  }
};

void zero_biases(ParamStore<D>& ps) {
  for (auto& [name, v] : ps.all())
    if (name.size() > 2 && name.substr(name.size() - 2) == ".b") v->val.fill(0);
}

FreqTriple<D> scale_triple(const FreqTriple<D>& x, double a) {
  FreqTriple<D> y;
  for (auto [src, dst] : {std::pair{&x.high, &y.high}, {&x.mid, &y.mid}, {&x.low, &y.low}})
    if (*src) *dst = ag::mul_scalar(*src, a);
  return y;
}

double triple_linearity_err(const FreqTriple<D>& fx_scaled, const FreqTriple<D>& f_ax) {
  double m = 0;
  for (auto [a, b] : {std::pair{&fx_scaled.high, &f_ax.high},
                      {&fx_scaled.mid, &f_ax.mid},
                      {&fx_scaled.low, &f_ax.low}})
    if (*a) m = std::max(m, max_abs_diff((*a)->val, (*b)->val));
  return m;
}

}  // namespace

TEST_CASE("ChannelSplit rounding") {
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  auto c192 = third.counts(192);
  CHECK(c192.high == 64);
  CHECK(c192.mid == 64);
  CHECK(c192.low == 64);
  auto c64 = third.counts(64);
  CHECK(c64.low == 21);
  CHECK(c64.mid == 21);
  CHECK(c64.high == 22);
  CHECK(c64.high + c64.mid + c64.low == 64);
  auto all_high = ChannelSplit{0, 0}.counts(7);
  CHECK(all_high.high == 7);
  CHECK(all_high.mid == 0);
  CHECK_THROWS(ChannelSplit{0.8, 0.8}.counts(10));
}

TEST_CASE("moconv matches straight-line transcription on random input") {
  Rng rng(100);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MoConv<D> block(ps, "m", rng, 6, third, 9, third);
  auto x = rand_triple(rng, third.counts(6), 8);
  auto y = block.forward(x);
  MoConvOracle oracle(block, x);
  CHECK(max_abs_diff(y.high->val, oracle.yh) < 1e-6);
  CHECK(max_abs_diff(y.mid->val, oracle.ym) < 1e-6);
  CHECK(max_abs_diff(y.low->val, oracle.yl) < 1e-6);
  // output resolutions unchanged per band
  CHECK(y.high->val.dims() == std::vector<int>{3, 8, 8});
  CHECK(y.mid->val.dims() == std::vector<int>{3, 4, 4});
  CHECK(y.low->val.dims() == std::vector<int>{3, 2, 2});
}

TEST_CASE("moconv image ingest and channel-count example") {
  Rng rng(101);
  ParamStore<D> ps;
  MoConv<D> block(ps, "m", rng, 3, ChannelSplit{0, 0}, 192,
                  ChannelSplit{1.0 / 3.0, 1.0 / 3.0});
  FreqTriple<D> x;
  x.high = ag::leaf(rand_t(rng, {3, 32, 32}));
  auto y = block.forward(x);
  CHECK(y.high->val.dims() == std::vector<int>{64, 32, 32});
  CHECK(y.mid->val.dims() == std::vector<int>{64, 16, 16});
  CHECK(y.low->val.dims() == std::vector<int>{64, 8, 8});
}

TEST_CASE("moconv degenerate split reduces to a plain convolution") {
  Rng rng(102);
  ParamStore<D> ps;
  MoConv<D> block(ps, "m", rng, 4, ChannelSplit{0, 0}, 5, ChannelSplit{0, 0});
  FreqTriple<D> x;
  x.high = ag::leaf(rand_t(rng, {4, 8, 8}));
  auto y = block.forward(x);
  CHECK(!y.mid);
  CHECK(!y.low);
  auto plain = apply_conv(*block.hh, x.high->val);
  CHECK(max_abs_diff(y.high->val, plain) < 1e-12);
}

TEST_CASE("moconv all-zero input with zero biases gives zero output") {
  Rng rng(103);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MoConv<D> block(ps, "m", rng, 6, third, 6, third);
  zero_biases(ps);
  auto c = third.counts(6);
  FreqTriple<D> x;
  x.high = ag::leaf(Tensor<D>({c.high, 8, 8}));
  x.mid = ag::leaf(Tensor<D>({c.mid, 4, 4}));
  x.low = ag::leaf(Tensor<D>({c.low, 2, 2}));
  auto y = block.forward(x);
  for (auto* b : {&y.high, &y.mid, &y.low})
    for (std::int64_t i = 0; i < (*b)->val.numel(); ++i) CHECK((*b)->val[i] == 0.0);
}

TEST_CASE("mtorb_down matches transcription and halves every band") {
  Rng rng(104);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MTorbDown<D> block(ps, "b", rng, 6, third, 6, third);
  auto x = rand_triple(rng, third.counts(6), 16);
  auto y = block.forward(x, Activation::none);
  CHECK(y.high->val.dims() == std::vector<int>{2, 8, 8});
  CHECK(y.mid->val.dims() == std::vector<int>{2, 4, 4});
  CHECK(y.low->val.dims() == std::vector<int>{2, 2, 2});

  MoConvOracle first(block.moconv, x);
  auto yh = tadd(apply_conv(*block.down_h, first.yh), apply_conv(*block.sc_h, x.high->val));
  auto ym = tadd(apply_conv(*block.down_m, first.ym), apply_conv(*block.sc_m, x.mid->val));
  auto yl = tadd(apply_conv(*block.down_l, first.yl), apply_conv(*block.sc_l, x.low->val));
  CHECK(max_abs_diff(y.high->val, yh) < 1e-6);
  CHECK(max_abs_diff(y.mid->val, ym) < 1e-6);
  CHECK(max_abs_diff(y.low->val, yl) < 1e-6);

  // odd dims rejected
  FreqTriple<D> odd;
  odd.high = ag::leaf(rand_t(rng, {2, 7, 7}));
  ParamStore<D> ps2;
  MTorbDown<D> plain(ps2, "p", rng, 2, ChannelSplit{0, 0}, 2, ChannelSplit{0, 0});
  CHECK_THROWS(plain.forward(odd, Activation::none));
}

TEST_CASE("mtorb degenerate split equals plain two-stage residual composition") {
  Rng rng(105);
  ParamStore<D> ps;
  MTorbDown<D> block(ps, "b", rng, 3, ChannelSplit{0, 0}, 4, ChannelSplit{0, 0});
  FreqTriple<D> x;
  x.high = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto y = block.forward(x, Activation::none);
  auto oracle = tadd(apply_conv(*block.down_h, apply_conv(*block.moconv.hh, x.high->val)),
                     apply_conv(*block.sc_h, x.high->val));
  CHECK(max_abs_diff(y.high->val, oracle) < 1e-6);
}

TEST_CASE("mtorb_up doubles bands and inverts the shape law") {
  Rng rng(106);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MTorbUp<D> up(ps, "u", rng, 6, third, 6, third);
  auto x = rand_triple(rng, third.counts(6), 16);
  auto y = up.forward(x, Activation::none);
  CHECK(y.high->val.dims() == std::vector<int>{2, 32, 32});
  CHECK(y.mid->val.dims() == std::vector<int>{2, 16, 16});
  CHECK(y.low->val.dims() == std::vector<int>{2, 8, 8});

  MTorbDown<D> down(ps, "d", rng, 6, third, 6, third);
  auto restored = up.forward(down.forward(x, Activation::none), Activation::none);
  CHECK(restored.high->val.dims() == x.high->val.dims());
  CHECK(restored.mid->val.dims() == x.mid->val.dims());
  CHECK(restored.low->val.dims() == x.low->val.dims());

  // zero weights -> zero output
  ParamStore<D> psz;
  MTorbUp<D> upz(psz, "z", rng, 6, third, 6, third);
  for (auto& [name, v] : psz.all()) v->val.fill(0);
  auto yz = upz.forward(x, Activation::none);
  for (auto* b : {&yz.high, &yz.mid, &yz.low})
    for (std::int64_t i = 0; i < (*b)->val.numel(); ++i) CHECK((*b)->val[i] == 0.0);
}

TEST_CASE("mtorb transcription matches with upsampling second stage") {
  Rng rng(107);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MTorbUp<D> block(ps, "u", rng, 6, third, 6, third);
  auto x = rand_triple(rng, third.counts(6), 8);
  auto y = block.forward(x, Activation::none);
  MoConvOracle first(block.moconv, x);
  auto yh = tadd(apply_convt(*block.up_h, first.yh), apply_convt(*block.sc_h, x.high->val));
  CHECK(max_abs_diff(y.high->val, yh) < 1e-6);
}

TEST_CASE("shape law across cascaded mtorb_down blocks") {
  Rng rng(108);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MTorbDown<D> b1(ps, "s1", rng, 6, third, 6, third);
  MTorbDown<D> b2(ps, "s2", rng, 6, third, 6, third);
  auto x = rand_triple(rng, third.counts(6), 32);
  auto y = b2.forward(b1.forward(x, Activation::none), Activation::none);
  CHECK(y.high->val.dim(1) == 8);   // r/2^k
  CHECK(y.mid->val.dim(1) == 4);    // r/2^(k+1)
  CHECK(y.low->val.dim(1) == 2);    // r/2^(k+2)
}

TEST_CASE("linearity of blocks with biases and activations disabled") {
  Rng rng(109);
  ParamStore<D> ps;
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};
  MoConv<D> mo(ps, "mo", rng, 6, third, 6, third);
  MTorbDown<D> down(ps, "dn", rng, 6, third, 6, third);
  MTorbUp<D> up(ps, "up", rng, 6, third, 6, third);
  zero_biases(ps);
  auto x = rand_triple(rng, third.counts(6), 8);
  for (double a : {0.0, 1.0, -2.0}) {
    auto ax = scale_triple(x, a);
    CHECK(triple_linearity_err(scale_triple(mo.forward(x), a), mo.forward(ax)) < 1e-12);
    CHECK(triple_linearity_err(scale_triple(down.forward(x, Activation::none), a),
                               down.forward(ax, Activation::none)) < 1e-12);
    CHECK(triple_linearity_err(scale_triple(up.forward(x, Activation::none), a),
                               up.forward(ax, Activation::none)) < 1e-12);
  }
}

TEST_CASE("mtorb_down gradient check over every kernel") {
  ChannelSplit third{1.0 / 3.0, 1.0 / 3.0};

  // central differences are only valid away from the LReLU kink, so pick the
  // first seed whose first-stage outputs keep a safe margin from zero
  std::optional<ParamStore<D>> ps;
  std::optional<MTorbDown<D>> block;
  FreqTriple<D> x;
  bool found = false;
  for (std::uint64_t seed = 110; seed < 140 && !found; ++seed) {
    ps.emplace();
    Rng rng(seed);
    block.emplace(*ps, "b", rng, 3, third, 3, third);
    x = rand_triple(rng, third.counts(3), 8);
    auto yp = block->moconv.forward(x);
    double margin = 1e9;
    for (auto* b : {&yp.high, &yp.mid, &yp.low})
      for (std::int64_t i = 0; i < (*b)->val.numel(); ++i)
        margin = std::min(margin, std::abs((*b)->val[i]));
    found = margin > 1e-3;
  }
  REQUIRE(found);

  for (Activation act : {Activation::none, Activation::lrelu}) {
    auto run = [&] {
      auto y = block->forward(x, act);
      return ag::add(ag::sum_all(y.high), ag::add(ag::sum_all(y.mid), ag::sum_all(y.low)));
    };
    ps->zero_grad();
    auto root = run();
    ag::backward(root);
    Rng pick(1);
    for (auto& [name, v] : ps->all()) {
      REQUIRE(!v->grad.empty());
      double err = testutil::gradcheck_param([&] { return run()->scalar(); }, v, 1e-5, 12, pick);
      INFO(name);
      CHECK(err < 1e-4);
    }
  }
}

// ---- two-band baselines ----

TEST_CASE("octconv matches literal transcription of its defining equations") {
  Rng rng(111);
  ParamStore<D> ps;
  OctConv<D> block(ps, "oc", rng, 2, 0.5, 2, 0.5);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {1, 8, 8}));
  x.low = ag::leaf(rand_t(rng, {1, 4, 4}));
  auto y = block.forward(x);
  // Y^H = f(pool(X^H,2); W_hh) + pool(up(f(X^L; W_lh); 2); 2)
  auto yh = tadd(apply_conv(*block.hh, naive_pool(x.high->val, 2)),
                 naive_pool(naive_up(apply_conv(*block.lh, x.low->val), 2), 2));
  // Y^L = f(pool(X^L,2); W_ll) + f(pool(X^H,4); W_hl)
  auto yl = tadd(apply_conv(*block.ll, naive_pool(x.low->val, 2)),
                 apply_conv(*block.hl, naive_pool(x.high->val, 4)));
  CHECK(max_abs_diff(y.high->val, yh) < 1e-6);
  CHECK(max_abs_diff(y.low->val, yl) < 1e-6);
  CHECK(y.high->val.dims() == std::vector<int>{1, 4, 4});
  CHECK(y.low->val.dims() == std::vector<int>{1, 2, 2});
}

TEST_CASE("octconv constant input with averaging kernels stays constant") {
  Rng rng(112);
  ParamStore<D> ps;
  OctKernels k1;
  k1.k_intra = 1;
  OctConv<D> block(ps, "oc", rng, 8, 0.5, 8, 0.5);
  // identity-like 1x1 kernels: rebuild with k=1 and averaging weights
  ParamStore<D> ps1;
  OctConv<D> b1(ps1, "oc", rng, 8, 0.5, 8, 0.5, k1);
  for (auto& [name, v] : ps1.all()) {
    if (name.substr(name.size() - 2) == ".w") {
      const int ci = v->val.dim(1);
      for (std::int64_t i = 0; i < v->val.numel(); ++i) v->val[i] = 1.0 / ci;
    } else {
      v->val.fill(0);
    }
  }
  BandPair<D> x;
  x.high = ag::leaf(Tensor<D>({4, 16, 16}));
  x.low = ag::leaf(Tensor<D>({4, 8, 8}));
  x.high->val.fill(0.7);
  x.low->val.fill(0.3);
  auto y = b1.forward(x);
  for (std::int64_t i = 0; i < y.high->val.numel(); ++i)
    CHECK(y.high->val[i] == doctest::Approx(0.7 + 0.3).epsilon(1e-12));
  for (std::int64_t i = 0; i < y.low->val.numel(); ++i)
    CHECK(y.low->val[i] == doctest::Approx(0.3 + 0.7).epsilon(1e-12));
}

TEST_CASE("octconv degenerate alpha=0 reduces to pooled plain conv") {
  Rng rng(113);
  ParamStore<D> ps;
  OctConv<D> block(ps, "oc", rng, 3, 0.0, 4, 0.0);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto y = block.forward(x);
  CHECK(!y.low);
  CHECK(max_abs_diff(y.high->val, apply_conv(*block.hh, naive_pool(x.high->val, 2))) < 1e-12);
}

TEST_CASE("goconv matches literal transcription") {
  Rng rng(114);
  ParamStore<D> ps;
  GoConv<D> block(ps, "go", rng, 2, 0.5, 2, 0.5);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {1, 8, 8}));
  x.low = ag::leaf(rand_t(rng, {1, 4, 4}));
  auto y = block.forward(x);
  auto yhh = apply_conv(*block.hh, x.high->val);
  auto yll = apply_conv(*block.ll, x.low->val);
  auto yh = tadd(yhh, apply_convt(*block.lh, yll));
  auto yl = tadd(yll, apply_conv(*block.hl, yhh));
  CHECK(max_abs_diff(y.high->val, yh) < 1e-6);
  CHECK(max_abs_diff(y.low->val, yl) < 1e-6);
}

TEST_CASE("goconv degenerate and constant-input behaviour") {
  Rng rng(115);
  ParamStore<D> ps;
  GoConv<D> deg(ps, "go", rng, 3, 0.0, 4, 0.0);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto y = deg.forward(x);
  CHECK(!y.low);
  CHECK(max_abs_diff(y.high->val, apply_conv(*deg.hh, x.high->val)) < 1e-12);

  OctKernels tile;
  tile.k_intra = 1;
  tile.k_down = 2;
  tile.k_up = 2;
  ParamStore<D> ps2;
  GoConv<D> cb(ps2, "go", rng, 4, 0.5, 4, 0.5, tile);
  for (auto& [name, v] : ps2.all()) {
    if (name.substr(name.size() - 2) == ".w") {
      const std::int64_t per_out = v->val.numel() / v->val.dim(v->val.rank() > 1 ? 0 : 0);
      (void)per_out;
      // averaging over input channels and taps
      const int k = v->val.dim(2);
      const int ci = v->val.dim(0);  // conv: (co,ci,k,k) -> dim1; convt: (ci,co,k,k) -> dim0
      (void)ci;
      double denom = static_cast<double>(v->val.dim(1)) * k * k;
      // for convT (ci,co,k,k) each output tap receives exactly one (ky,kx),
      // so normalize by ci only
      if (&*v == &*cb.lh->w) denom = static_cast<double>(v->val.dim(0));
      for (std::int64_t i = 0; i < v->val.numel(); ++i) v->val[i] = 1.0 / denom;
    } else {
      v->val.fill(0);
    }
  }
  BandPair<D> c;
  c.high = ag::leaf(Tensor<D>({2, 8, 8}));
  c.low = ag::leaf(Tensor<D>({2, 4, 4}));
  c.high->val.fill(0.5);
  c.low->val.fill(0.25);
  auto cy = cb.forward(c);
  // Yhh = 0.5, Yll = 0.25; YH = Yhh + up(Yll) = 0.75, YL = Yll + down(Yhh) = 0.75
  for (std::int64_t i = 0; i < cy.high->val.numel(); ++i)
    CHECK(cy.high->val[i] == doctest::Approx(0.75).epsilon(1e-12));
  for (std::int64_t i = 0; i < cy.low->val.numel(); ++i)
    CHECK(cy.low->val[i] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("torb matches literal transcription") {
  Rng rng(116);
  ParamStore<D> ps;
  Torb<D> block(ps, "tb", rng, 2, 0.5, 2, 0.5);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {1, 8, 8}));
  x.low = ag::leaf(rand_t(rng, {1, 4, 4}));
  auto y = block.forward(x);
  auto yph = tadd(apply_conv(*block.hh, x.high->val), apply_convt(*block.lh, x.low->val));
  auto ypl = tadd(apply_conv(*block.ll, x.low->val), apply_conv(*block.hl, x.high->val));
  auto yh = tadd(apply_conv(*block.second_h, yph), apply_conv(*block.sc_h, x.high->val));
  auto yl = tadd(apply_conv(*block.second_l, ypl), apply_conv(*block.sc_l, x.low->val));
  CHECK(max_abs_diff(y.high->val, yh) < 1e-6);
  CHECK(max_abs_diff(y.low->val, yl) < 1e-6);
  CHECK(y.high->val.dims() == std::vector<int>{1, 4, 4});
  CHECK(y.low->val.dims() == std::vector<int>{1, 2, 2});
}

TEST_CASE("torb degenerate alpha=0") {
  Rng rng(117);
  ParamStore<D> ps;
  Torb<D> deg(ps, "tb", rng, 3, 0.0, 4, 0.0);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto y = deg.forward(x);
  CHECK(!y.low);
  auto oracle = tadd(apply_conv(*deg.second_h, apply_conv(*deg.hh, x.high->val)),
                     apply_conv(*deg.sc_h, x.high->val));
  CHECK(max_abs_diff(y.high->val, oracle) < 1e-12);
}

TEST_CASE("two-band blocks are linear with biases zeroed") {
  Rng rng(118);
  ParamStore<D> ps;
  OctConv<D> oc(ps, "oc", rng, 4, 0.5, 4, 0.5);
  GoConv<D> go(ps, "go", rng, 4, 0.5, 4, 0.5);
  Torb<D> tb(ps, "tb", rng, 4, 0.5, 4, 0.5);
  zero_biases(ps);
  BandPair<D> x;
  x.high = ag::leaf(rand_t(rng, {2, 8, 8}));
  x.low = ag::leaf(rand_t(rng, {2, 4, 4}));
  for (double a : {0.0, 1.0, -2.0}) {
    BandPair<D> ax{ag::mul_scalar(x.high, a), ag::mul_scalar(x.low, a)};
    auto check_pair = [&](const BandPair<D>& fx, const BandPair<D>& fax) {
      CHECK(max_abs_diff(ag::mul_scalar(fx.high, a)->val, fax.high->val) < 1e-12);
      CHECK(max_abs_diff(ag::mul_scalar(fx.low, a)->val, fax.low->val) < 1e-12);
    };
    check_pair(oc.forward(x), oc.forward(ax));
    check_pair(go.forward(x), go.forward(ax));
    check_pair(tb.forward(x), tb.forward(ax));
  }
}

// ---- GDN ----

TEST_CASE("gdn with gamma=0, beta=1 is the identity") {
  Rng rng(119);
  ParamStore<D> ps;
  Gdn<D> layer(ps, "gdn", 3);
  layer.gamma_param()->val.fill(0);
  // beta = beta_min + t^2 = 1
  auto t = layer.beta_param();
  for (int i = 0; i < 3; ++i) t->val[i] = std::sqrt(1.0 - Gdn<D>::kBetaMin);
  auto x = ag::leaf(rand_t(rng, {3, 5, 5}));
  auto y = layer.forward(x);
  CHECK(max_abs_diff(y->val, x->val) < 1e-12);
}

TEST_CASE("igdn(gdn(x)) recovers x to 1e-6 for bounded x and moderate gamma") {
  Rng rng(120);
  ParamStore<D> ps;
  Gdn<D> layer(ps, "gdn", 4);
  // shared params; gamma small enough that the one-step inverse is exact to
  // the stated tolerance on [-1, 1]
  auto g = layer.gamma_param();
  for (std::int64_t i = 0; i < g->val.numel(); ++i)
    g->val[i] = std::sqrt(1e-4 * (0.5 + 0.5 * rand_t(rng, {1})[0]));
  auto x = ag::leaf(rand_t(rng, {4, 6, 6}, -1, 1));
  auto rec = layer.forward(layer.forward(x, false), true);
  CHECK(max_abs_diff(rec->val, x->val) < 1e-6);

  // exact when gamma = 0
  g->val.fill(0);
  auto rec0 = layer.forward(layer.forward(x, false), true);
  CHECK(max_abs_diff(rec0->val, x->val) < 1e-12);
}

TEST_CASE("gdn module gradient check through reparameterization") {
  Rng rng(121);
  ParamStore<D> ps;
  Gdn<D> layer(ps, "gdn", 3);
  auto x = ag::leaf(rand_t(rng, {3, 4, 4}), true);
  auto run = [&] { return ag::sum_all(layer.forward(x)); };
  auto root = run();
  ag::backward(root);
  Rng pick(2);
  for (auto p : {layer.gamma_param(), layer.beta_param(), x}) {
    double err = testutil::gradcheck_param([&] { return run()->scalar(); }, p, 1e-5, 16, pick);
    CHECK(err < 1e-4);
  }
}
