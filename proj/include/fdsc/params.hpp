#pragma once

#include <string>
#include <vector>

#include "fdsc/autograd.hpp"
#include "fdsc/rng.hpp"

namespace fdsc {

// Ordered registry of named trainable tensors. Names are module paths
// ("ga.stage1.moconv.w_hh" etc.) and double as checkpoint keys; registration
// order is construction order and fixes the initialization draw sequence.
template <typename T>
class ParamStore {
 public:
  ag::Var<T> create(const std::string& name, Tensor<T> init) {
    for (auto& [n, v] : params_)
      check(n != name, "duplicate parameter name: " + name);
    auto v = ag::leaf<T>(std::move(init), true);
    params_.emplace_back(name, v);
    return v;
  }

  const std::vector<std::pair<std::string, ag::Var<T>>>& all() const {
    return params_;
  }

  ag::Var<T> find(const std::string& name) const {
    for (auto& [n, v] : params_)
      if (n == name) return v;
    return nullptr;
  }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (auto& [_, v] : params_) n += v->val.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, v] : params_) v->zero_grad();
  }

 private:
  std::vector<std::pair<std::string, ag::Var<T>>> params_;
};

// Xavier-uniform init for a conv kernel (co,ci,k,k) or (ci,co,k,k).
template <typename T>
Tensor<T> xavier_init(Rng& rng, std::vector<int> dims) {
  std::int64_t fan_in = 1, fan_out = 1;
  if (dims.size() == 4) {
    fan_in = static_cast<std::int64_t>(dims[1]) * dims[2] * dims[3];
    fan_out = static_cast<std::int64_t>(dims[0]) * dims[2] * dims[3];
  } else if (dims.size() == 2) {
    fan_in = dims[1];
    fan_out = dims[0];
  }
  const T limit = std::sqrt(T(6) / static_cast<T>(fan_in + fan_out));
  return rand_uniform<T>(rng, std::move(dims), -limit, limit);
}

}  // namespace fdsc
