// Compares the OpenMP kernels against the serial references on the shapes
// that dominate codec runtime, and reports speedups.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fdsc/kernels.hpp"
#include "fdsc/rng.hpp"

using namespace fdsc;

namespace {

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e100;
  for (int i = 0; i < reps; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

struct Case {
  std::string name;
  int ci, hw, co, k, s, p;
};

template <typename T>
void run(const char* label) {
  Rng rng(1);
  std::vector<Case> cases = {
      {"conv 3x3 s1  64ch 128px", 64, 128, 64, 3, 1, 1},
      {"conv 3x3 s1  22ch 256px", 22, 256, 22, 3, 1, 1},
      {"conv 3x3 s2  64ch 128px", 64, 128, 64, 3, 2, 1},
      {"conv 5x5 s1  32ch  64px", 32, 64, 32, 5, 1, 2},
      {"conv 1x1 s1 192ch  32px", 192, 32, 192, 1, 1, 0},
  };
  std::printf("\n%s\n%-26s %12s %12s %9s %9s\n", label, "case", "serial(ms)",
              "openmp(ms)", "speedup", "GF/s");
  for (const auto& c : cases) {
    auto x = rand_uniform<T>(rng, {c.ci, c.hw, c.hw}, T(-1), T(1));
    auto w = rand_uniform<T>(rng, {c.co, c.ci, c.k, c.k}, T(-1), T(1));
    auto b = rand_uniform<T>(rng, {c.co}, T(-1), T(1));
    Tensor<T> ys, yp;
    const double ts =
        time_best_of(3, [&] { kernels::ref::conv2d(x, w, b.data(), c.s, c.p, ys); });
    const double tp =
        time_best_of(3, [&] { kernels::conv2d(x, w, b.data(), c.s, c.p, yp); });
    double worst = 0;
    for (std::int64_t i = 0; i < ys.numel(); ++i)
      worst = std::max(worst, static_cast<double>(std::abs(ys[i] - yp[i])));
    const double macs = 2.0 * c.co * c.ci * c.k * c.k *
                        static_cast<double>(yp.dim(1)) * yp.dim(2);
    std::printf("%-26s %12.2f %12.2f %8.2fx %9.2f%s\n", c.name.c_str(), ts * 1e3,
                tp * 1e3, ts / tp, macs / tp / 1e9,
                worst == 0 ? "" : "  MISMATCH");
  }
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#endif
  run<float>("float32");
  run<double>("float64");
  return 0;
}
