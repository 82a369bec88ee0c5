#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gated/errors.hpp"

namespace gated {

// Dense 4-D tensor in NCHW layout. Ranks below 4 are represented by setting
// the leading dims to 1 (a bias of C elements is {1, C, 1, 1}).
template <typename T>
class TensorT {
 public:
  TensorT() : shape_{0, 0, 0, 0} {}
  TensorT(int n, int c, int h, int w, T value = T(0)) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0)
      throw ShapeError("negative tensor dimension");
    data_.assign(static_cast<size_t>(n) * c * h * w, value);
  }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }

  size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& at(int in, int ic, int iy, int ix) {
    return data_[((static_cast<size_t>(in) * shape_[1] + ic) * shape_[2] + iy) * shape_[3] + ix];
  }
  const T& at(int in, int ic, int iy, int ix) const {
    return data_[((static_cast<size_t>(in) * shape_[1] + ic) * shape_[2] + iy) * shape_[3] + ix];
  }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
  void zero() { fill(T(0)); }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  std::string shape_str() const {
    return "(" + std::to_string(shape_[0]) + ", " + std::to_string(shape_[1]) + ", " +
           std::to_string(shape_[2]) + ", " + std::to_string(shape_[3]) + ")";
  }

  // Pointer to the start of one (n, c) plane.
  T* plane(int in, int ic) {
    return data_.data() + (static_cast<size_t>(in) * shape_[1] + ic) * shape_[2] * shape_[3];
  }
  const T* plane(int in, int ic) const {
    return data_.data() + (static_cast<size_t>(in) * shape_[1] + ic) * shape_[2] * shape_[3];
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  std::array<int, 4> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

}  // namespace gated
