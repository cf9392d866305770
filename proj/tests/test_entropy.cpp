#include <cmath>

#include "doctest.h"
#include "fdsc/entropy.hpp"
#include "test_util.hpp"

using namespace fdsc;
namespace ag = fdsc::ag;
using testutil::rand_t;

namespace {
using D = double;

ag::Var<D> ones_like(const std::vector<int>& dims, double v = 1.0) {
  auto t = Tensor<D>(dims);
  t.fill(v);
  return ag::leaf(std::move(t));
}
}  // namespace

TEST_CASE("gaussian mass at the origin with unit sigma and unit interval") {
  // oracle: Phi(1/2) - Phi(-1/2) via the error function
  const double expected = 0.5 * (std::erf(0.5 / std::sqrt(2.0)) - std::erf(-0.5 / std::sqrt(2.0)));
  CHECK(expected == doctest::Approx(0.3829249).epsilon(1e-6));
  auto y = ones_like({1, 1, 1}, 0.0);
  auto mu = ones_like({1, 1, 1}, 0.0);
  auto sg = ones_like({1, 1, 1}, 1.0);
  auto p = ag::gaussian_mass<D>(y, mu, sg, nullptr, kPMin);
  CHECK(p->val[0] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("gaussian mass tail engages the likelihood floor") {
  auto y = ones_like({1, 1, 1}, 10.0);
  auto mu = ones_like({1, 1, 1}, 0.0);
  auto sg = ones_like({1, 1, 1}, 1.0);
  auto p = ag::gaussian_mass<D>(y, mu, sg, nullptr, kPMin);
  CHECK(p->val[0] == kPMin);
}

TEST_CASE("gaussian masses partition the real line") {
  const int n = 81;  // k in [-40, 40]
  auto y = ag::leaf(Tensor<D>({1, 1, n}));
  for (int i = 0; i < n; ++i) y->val[i] = (i - 40) * 0.5;
  auto mu = ones_like({1, 1, n}, 0.0);
  auto sg = ones_like({1, 1, n}, 1.0);
  auto dl = ones_like({1, 1, n}, 0.5);
  // the raw masses telescope to exactly one
  auto p_raw = ag::gaussian_mass(y, mu, sg, dl, 0.0);
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += p_raw->val[i];
  CHECK(std::abs(sum - 1.0) < 1e-9);
  // the production floor only adds negligible tail mass
  auto p = ag::gaussian_mass(y, mu, sg, dl, kPMin);
  sum = 0;
  for (int i = 0; i < n; ++i) sum += p->val[i];
  CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("delta=1 reproduces the classical unit-noise conditional model") {
  Rng rng(300);
  auto y = ag::leaf(rand_t(rng, {2, 4, 4}, -3, 3));
  auto mu = ag::leaf(rand_t(rng, {2, 4, 4}, -1, 1));
  auto sg = ag::leaf(rand_t(rng, {2, 4, 4}, 0.2, 2.0));
  auto unit = ones_like({2, 4, 4}, 1.0);
  auto p_explicit = ag::gaussian_mass(y, mu, sg, unit, kPMin);
  auto p_implicit = ag::gaussian_mass<D>(y, mu, sg, nullptr, kPMin);
  CHECK(testutil::max_abs_diff(p_explicit->val, p_implicit->val) == 0.0);
}

TEST_CASE("factorized model: fresh init sums to one over [-60, 60]") {
  ParamStore<D> ps;
  FactorizedModel<D> fem(ps, "fem", 3);
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0;
    for (int k = -60; k <= 60; ++k)
      sum += fem.cdf(ch, k + 0.5) - fem.cdf(ch, k - 0.5);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("factorized model CDF is monotone non-decreasing") {
  ParamStore<D> ps;
  FactorizedModel<D> fem(ps, "fem", 2);
  // also at randomized parameters
  Rng rng(301);
  for (auto& [name, v] : ps.all())
    for (std::int64_t i = 0; i < v->val.numel(); ++i)
      v->val[i] += rand_t(rng, {1}, -0.3, 0.3)[0];
  for (int ch = 0; ch < 2; ++ch) {
    double prev = -1;
    for (double x = -30; x <= 30; x += 0.01) {
      const double f = fem.cdf(ch, x);
      CHECK(f >= prev);
      prev = f;
    }
    CHECK(fem.cdf(ch, -1e4) < 1e-6);
    CHECK(fem.cdf(ch, 1e4) > 1 - 1e-6);
  }
}

TEST_CASE("factorized likelihood gradient vs central differences") {
  ParamStore<D> ps;
  FactorizedModel<D> fem(ps, "fem", 2);
  Rng rng(302);
  auto z = ag::leaf(rand_t(rng, {2, 3, 3}, -4, 4), true);
  auto run = [&] {
    return ag::mul_scalar(ag::sum_all(ag::log2_v(fem.likelihood(z))), -1.0);
  };
  ps.zero_grad();
  z->zero_grad();
  ag::backward(run());
  Rng pick(5);
  for (auto& [name, v] : ps.all()) {
    double err = testutil::gradcheck_param([&] { return run()->scalar(); }, v, 1e-5, 8, pick);
    INFO(name);
    CHECK(err < 1e-4);
  }
  CHECK(testutil::gradcheck_param([&] { return run()->scalar(); }, z, 1e-5, 10, pick) < 1e-4);
}

TEST_CASE("factorized median and quantiles bracket the mass") {
  ParamStore<D> ps;
  FactorizedModel<D> fem(ps, "fem", 1);
  const double med = fem.median(0);
  CHECK(fem.cdf(0, med) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(fem.quantile(0, kTailMass) < med);
  CHECK(fem.quantile(0, 1 - kTailMass) > med);
}

TEST_CASE("rate accounting in bits") {
  // all p = 0.5 with n elements -> n bits
  auto p = ones_like({2, 3, 4}, 0.5);
  CHECK(neg_log2_sum(p->val) == doctest::Approx(24.0));
  auto node = rate_bits_node(p);
  CHECK(node->val[0] == doctest::Approx(24.0));
  // p = 1 -> 0 bits
  auto p1 = ones_like({1, 2, 2}, 1.0);
  CHECK(neg_log2_sum(p1->val) == doctest::Approx(0.0));
  // random probabilities vs independent long-double summation
  Rng rng(303);
  auto pr = rand_t(rng, {3, 5, 5}, 1e-6, 1.0);
  long double acc = 0;
  for (std::int64_t i = 0; i < pr.numel(); ++i)
    acc -= std::log2(static_cast<long double>(pr[i]));
  const double rel = std::abs(static_cast<double>(acc) - neg_log2_sum(pr)) /
                     static_cast<double>(acc);
  CHECK(rel < 1e-6);
}

TEST_CASE("integer CDF rows: exact normalization and quantization error bound") {
  Rng rng(304);
  for (int trial = 0; trial < 50; ++trial) {
    const double m = rand_t(rng, {1}, -40, 40)[0];
    const double s = snap_scale(rand_t(rng, {1}, 0.05, 12.0)[0]);
    CdfRow row = conditional_cdf_row(m, s);
    CHECK(row.cum.front() == 0);
    CHECK(row.cum.back() == 65536u);
    double total_analytic = 0;
    const std::int64_t center = std::llround(m);
    for (int i = 0; i < row.size(); ++i) {
      CHECK(row.cum[i + 1] > row.cum[i]);  // every in-range symbol >= 1
      const double j = static_cast<double>(row.symbol(i) - center);
      const double frac = m - static_cast<double>(center);
      const double analytic =
          normal_cdf((j + 0.5 - frac) / s) - normal_cdf((j - 0.5 - frac) / s);
      total_analytic += analytic;
      // integer quantization error: one quantum plus the renormalization residue
      CHECK(std::abs(row.prob(i) - analytic) <=
            1.0 / 65536.0 + (1.0 - total_analytic) + 64.0 / 65536.0);
    }
    CHECK(total_analytic > 1 - 1e-6);
  }
}

TEST_CASE("symbols reconstruct from their own CDF row by binary search") {
  Rng rng(305);
  for (int trial = 0; trial < 20; ++trial) {
    const double m = rand_t(rng, {1}, -30, 30)[0];
    const double s = snap_scale(rand_t(rng, {1}, 0.05, 4.0)[0]);
    CdfRow row = conditional_cdf_row(m, s);
    for (int idx = 0; idx < row.size(); ++idx) {
      // any code value inside the symbol's interval must select it
      for (std::uint32_t val : {row.cum[idx], (row.cum[idx] + row.cum[idx + 1] - 1) / 2,
                                row.cum[idx + 1] - 1}) {
        const auto it = std::upper_bound(row.cum.begin(), row.cum.end(), val);
        const int found = static_cast<int>(it - row.cum.begin()) - 1;
        CHECK(found == idx);
      }
    }
  }
}

TEST_CASE("scale table: 64 log-spaced entries, snapping rounds up") {
  const auto& t = scale_table();
  CHECK(t.size() == 64);
  CHECK(t.front() == doctest::Approx(kSigmaMin));
  CHECK(t.back() == doctest::Approx(kScaleTableMax));
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  CHECK(snap_scale(0.0001) == doctest::Approx(kSigmaMin));
  CHECK(snap_scale(1e9) == doctest::Approx(kScaleTableMax));
  const double s = 0.5;
  CHECK(snap_scale(s) >= s);
}

TEST_CASE("factorized static rows: normalization and round-trip by search") {
  ParamStore<D> ps;
  FactorizedModel<D> fem(ps, "fem", 2);
  for (int ch = 0; ch < 2; ++ch) {
    CdfRow row = fem.cdf_row(ch);
    CHECK(row.cum.back() == 65536u);
    for (int i = 0; i < row.size(); ++i) CHECK(row.cum[i + 1] > row.cum[i]);
    // mass concentrated inside the support
    CHECK(row.symbol(0) <= -1);
    CHECK(row.symbol(row.size() - 1) >= 1);
  }
}
