#pragma once

#include <random>

#include "fdsc/tensor.hpp"

namespace fdsc {

using Rng = std::mt19937_64;

template <typename T>
Tensor<T> rand_uniform(Rng& rng, std::vector<int> dims, T lo = T(0), T hi = T(1)) {
  Tensor<T> t(std::move(dims));
  std::uniform_real_distribution<double> d(static_cast<double>(lo),
                                           static_cast<double>(hi));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(d(rng));
  return t;
}

template <typename T>
Tensor<T> rand_normal(Rng& rng, std::vector<int> dims, T mean = T(0), T stddev = T(1)) {
  Tensor<T> t(std::move(dims));
  std::normal_distribution<double> d(static_cast<double>(mean),
                                     static_cast<double>(stddev));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(d(rng));
  return t;
}

}  // namespace fdsc
