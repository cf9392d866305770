#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdsc {

// Dense row-major tensor, rank 1..4. Feature maps are (c, h, w),
// conv weights (co, ci, kh, kw).
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims) { reset(std::move(dims)); }
  Tensor(std::initializer_list<int> dims) { reset(std::vector<int>(dims)); }

  void reset(std::vector<int> dims) {
    if (dims.empty() || dims.size() > 4)
      throw std::invalid_argument("tensor rank must be 1..4");
    std::int64_t n = 1;
    for (int d : dims) {
      if (d < 0) throw std::invalid_argument("negative tensor dim");
      n *= d;
    }
    dims_ = std::move(dims);
    v_.assign(static_cast<std::size_t>(n), T(0));
  }

  bool empty() const { return v_.empty(); }
  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& dims() const { return dims_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(v_.size()); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& vec() { return v_; }
  const std::vector<T>& vec() const { return v_; }

  T& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }

  // (c,h,w) accessor for rank-3 tensors
  T& at(int c, int y, int x) {
    return v_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return v_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }

  void fill(T value) { std::fill(v_.begin(), v_.end(), value); }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + ")";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(v_[i]);
    return out;
  }

 private:
  std::vector<int> dims_;
  std::vector<T> v_;
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace fdsc
