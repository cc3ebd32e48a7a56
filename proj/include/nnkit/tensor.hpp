#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "nnkit/common.hpp"

namespace nnkit {

/// Dense row-major N-d array. The engine runs on float; the verification
/// suites instantiate the same code with double.
template <typename T> class TensorT {
public:
  TensorT() = default;

  explicit TensorT(std::vector<std::size_t> shape, T fill = T(0)) : shape_(std::move(shape)) {
    data_.assign(count(shape_), fill);
  }

  TensorT(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_))
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape volume " + std::to_string(count(shape_)));
  }

  static std::size_t count(const std::vector<std::size_t> &shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
      if (e == 0)
        throw ConfigError("tensor shape extent must be positive");
      n *= e;
    }
    return n;
  }

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t d) const { return shape_[d]; }
  std::size_t size() const { return data_.size(); }

  T *data() { return data_.data(); }
  const T *data() const { return data_.data(); }
  std::vector<T> &vec() { return data_; }
  const std::vector<T> &vec() const { return data_; }

  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  /// 3-d accessor (channels, rows, cols).
  T &at3(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const T &at3(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  /// 4-d accessor (out-ch, in-ch, rows, cols).
  T &at4(std::size_t a, std::size_t b, std::size_t y, std::size_t x) {
    return data_[((a * shape_[1] + b) * shape_[2] + y) * shape_[3] + x];
  }
  const T &at4(std::size_t a, std::size_t b, std::size_t y, std::size_t x) const {
    return data_[((a * shape_[1] + b) * shape_[2] + y) * shape_[3] + x];
  }

  bool same_shape(const TensorT &other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v)))
        return false;
    return true;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U> TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<U>(data_[i]);
    return TensorT<U>(shape_, std::move(out));
  }

private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

inline std::string shape_str(const std::vector<std::size_t> &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
    s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

} // namespace nnkit
