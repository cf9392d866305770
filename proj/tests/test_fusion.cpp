#include "doctest.h"
#include "fdsc/fusion.hpp"
#include "test_util.hpp"

using namespace fdsc;
namespace ag = fdsc::ag;
using testutil::max_abs_diff;
using testutil::rand_t;

namespace {
using D = double;

void zero_all(ParamStore<D>& ps, bool keep_gdn = true) {
  for (auto& [name, v] : ps.all()) {
    if (keep_gdn && (name.find(".gdn") != std::string::npos)) continue;
    v->val.fill(0);
  }
}
}  // namespace

TEST_CASE("tsfrb with zero conv weights is the identity (skip only)") {
  Rng rng(200);
  ParamStore<D> ps;
  Tsfrb<D> block(ps, "t", rng, 4);
  zero_all(ps);
  auto x = ag::leaf(rand_t(rng, {4, 8, 8}));
  auto y = block.forward(x);
  CHECK(max_abs_diff(y->val, x->val) == 0.0);
}

TEST_CASE("tsfrb preserves shape and rejects channel mismatch") {
  Rng rng(201);
  ParamStore<D> ps;
  Tsfrb<D> block(ps, "t", rng, 6);
  auto x = ag::leaf(rand_t(rng, {6, 16, 16}));
  auto y = block.forward(x);
  CHECK(y->val.dims() == x->val.dims());
  auto bad = ag::leaf(rand_t(rng, {5, 16, 16}));
  CHECK_THROWS(block.forward(bad));
}

TEST_CASE("tsfrb gradient check") {
  Rng rng(202);
  ParamStore<D> ps;
  Tsfrb<D> block(ps, "t", rng, 3);
  auto x = ag::leaf(rand_t(rng, {3, 8, 8}), true);
  auto run = [&] { return ag::sum_all(block.forward(x)); };
  ps.zero_grad();
  x->zero_grad();
  ag::backward(run());
  Rng pick(3);
  int checked = 0;
  for (auto& [name, v] : ps.all()) {
    REQUIRE(!v->grad.empty());
    double err = testutil::gradcheck_param([&] { return run()->scalar(); }, v, 1e-5, 6, pick);
    INFO(name);
    CHECK(err < 1e-4);
    ++checked;
  }
  CHECK(checked > 20);
  CHECK(testutil::gradcheck_param([&] { return run()->scalar(); }, x, 1e-5, 8, pick) < 1e-4);
}

TEST_CASE("ctsfrb identity with zero weights, zeros map to zeros") {
  Rng rng(203);
  ParamStore<D> ps;
  Ctsfrb<D> block(ps, "c", rng, 4, true);
  zero_all(ps);
  auto x = ag::leaf(rand_t(rng, {4, 8, 8}));
  CHECK(max_abs_diff(block.forward(x)->val, x->val) == 0.0);

  auto zeros = ag::leaf(Tensor<D>({4, 8, 8}));
  auto y = block.forward(zeros);
  for (std::int64_t i = 0; i < y->val.numel(); ++i) CHECK(y->val[i] == 0.0);
}

TEST_CASE("ctsfrb single vs cascaded configurations differ and are selectable") {
  Rng rng(204);
  ParamStore<D> ps1, ps2;
  Rng r1(42), r2(42);
  Ctsfrb<D> single(ps1, "c", r1, 4, false);
  Ctsfrb<D> cascade(ps2, "c", r2, 4, true);
  CHECK(ps2.total_size() > ps1.total_size());
  auto x = ag::leaf(rand_t(rng, {4, 8, 8}));
  // same seed: t1 weights identical, so the cascade output must add the
  // second block's contribution
  auto ys = single.forward(x);
  auto yc = cascade.forward(x);
  CHECK(max_abs_diff(ys->val, yc->val) > 1e-9);
}

TEST_CASE("wam zero projection is the identity") {
  Rng rng(205);
  ParamStore<D> ps;
  Wam<D> block(ps, "w", rng, 3, 4);
  block.proj.w->val.fill(0);
  block.proj.b->val.fill(0);
  auto x = ag::leaf(rand_t(rng, {3, 8, 8}));
  CHECK(max_abs_diff(block.forward(x)->val, x->val) == 0.0);
}

TEST_CASE("attention rows sum to one (constant-value probe)") {
  Rng rng(206);
  auto q = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto k = ag::leaf(rand_t(rng, {3, 8, 8}));
  auto v = ag::leaf(Tensor<D>({3, 8, 8}));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 64; ++i) v->val[c * 64 + i] = 0.25 * (c + 1);
  auto y = ag::window_attention(q, k, v, 4);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 64; ++i)
      CHECK(y->val[c * 64 + i] == doctest::Approx(0.25 * (c + 1)).epsilon(1e-6));
}

TEST_CASE("wam window permutation equivariance on a 2-window input") {
  Rng rng(207);
  ParamStore<D> ps;
  Wam<D> block(ps, "w", rng, 2, 4);
  auto x = ag::leaf(rand_t(rng, {2, 4, 8}));  // two 4x4 windows side by side
  auto y = block.forward(x);
  // swap the two windows of the input
  auto xs = ag::leaf(Tensor<D>({2, 4, 8}));
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 8; ++col)
        xs->val.at(c, r, col) = x->val.at(c, r, (col + 4) % 8);
  auto ys = block.forward(xs);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 8; ++col)
        CHECK(ys->val.at(c, r, col) ==
              doctest::Approx(y->val.at(c, r, (col + 4) % 8)).epsilon(1e-9));
}

TEST_CASE("wam output in a window depends only on that window") {
  Rng rng(208);
  ParamStore<D> ps;
  Wam<D> block(ps, "w", rng, 2, 4);
  auto x = ag::leaf(rand_t(rng, {2, 4, 8}));
  auto y = block.forward(x);
  // mask the second window; first window output must not move
  auto xm = ag::leaf(x->val);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r)
      for (int col = 4; col < 8; ++col) xm->val.at(c, r, col) = 0;
  auto ym = block.forward(xm);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col)
        CHECK(ym->val.at(c, r, col) == doctest::Approx(y->val.at(c, r, col)).epsilon(1e-12));
}

TEST_CASE("effective window degrades to a divisor of the spatial dims") {
  CHECK(Wam<D>::effective_window(8, 16, 16) == 8);
  CHECK(Wam<D>::effective_window(8, 4, 4) == 4);
  CHECK(Wam<D>::effective_window(4, 6, 6) == 2);
  CHECK(Wam<D>::effective_window(4, 3, 3) == 1);
  CHECK(Wam<D>::effective_window(4, 2, 4) == 2);
}

TEST_CASE("wam gradient check") {
  Rng rng(209);
  ParamStore<D> ps;
  Wam<D> block(ps, "w", rng, 2, 4);
  auto x = ag::leaf(rand_t(rng, {2, 4, 4}), true);
  auto sink = ag::leaf(rand_t(rng, {2, 4, 4}));
  auto run = [&] { return ag::mse(block.forward(x), sink); };
  ps.zero_grad();
  x->zero_grad();
  ag::backward(run());
  Rng pick(4);
  for (auto& [name, v] : ps.all()) {
    double err = testutil::gradcheck_param([&] { return run()->scalar(); }, v, 1e-5, 6, pick);
    INFO(name);
    CHECK(err < 1e-4);
  }
}
