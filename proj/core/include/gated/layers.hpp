#pragma once

#include <string>
#include <vector>

#include "gated/rng.hpp"
#include "gated/tensor.hpp"

namespace gated {

// Named view of a module tensor. Trainable entries carry a gradient tensor;
// buffers (e.g. batch-norm running stats) carry value only.
template <typename T>
struct ParamRefT {
  std::string name;
  TensorT<T>* value = nullptr;
  TensorT<T>* grad = nullptr;
  bool trainable = false;
};

template <typename T>
using ParamListT = std::vector<ParamRefT<T>>;

using ParamRef = ParamRefT<float>;
using ParamList = ParamListT<float>;

// He-normal init: std = sqrt(2 / fan_in).
template <typename T>
void he_normal_init(TensorT<T>& w, int fan_in, Rng& rng);

// Patch extraction over output-pixel range [c0, c1) of an (C, H, W) plane.
// col is (C*kh*kw) x (c1-c0), row-major. Zero padding.
template <typename T>
void im2col_range(const T* src, int c, int h, int w, int kh, int kw, int sy, int sx, int py,
                  int px, int wo, int c0, int c1, T* col);

// Adjoint of im2col_range: accumulates into dst (C, H, W).
template <typename T>
void col2im_range(const T* col, int c, int h, int w, int kh, int kw, int sy, int sx, int py,
                  int px, int wo, int c0, int c1, T* dst);

// 2-D convolution, square kernel, zero padding, GEMM over im2col patches.
// Work is chunked over output pixels so scratch stays bounded.
template <typename T>
class Conv2dT {
 public:
  Conv2dT(int in_c, int out_c, int k, int stride, int pad, bool bias, Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);
  void drop_cache() { x_ = TensorT<T>(); }

  TensorT<T>& weight() { return weight_; }
  TensorT<T>& bias() { return bias_; }
  TensorT<T>& grad_weight() { return gweight_; }
  TensorT<T>& grad_bias() { return gbias_; }
  int out_channels() const { return out_c_; }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool has_bias_;
  TensorT<T> weight_, bias_, gweight_, gbias_;
  TensorT<T> x_;  // cached input for backward
};

// Transposed convolution with kernel 2, stride 2 (resolution doubling).
// Weight layout is (in_c, out_c, k, k).
template <typename T>
class ConvTranspose2dT {
 public:
  ConvTranspose2dT(int in_c, int out_c, int k, int stride, Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);
  void drop_cache() { x_ = TensorT<T>(); }

  TensorT<T>& weight() { return weight_; }
  TensorT<T>& bias() { return bias_; }

 private:
  int in_c_, out_c_, k_, stride_;
  TensorT<T> weight_, bias_, gweight_, gbias_;
  TensorT<T> x_;
};

// Batch normalization over (N, H, W) per channel. Training mode normalizes
// with biased batch statistics and updates running stats with the unbiased
// variance; eval mode normalizes with the running stats.
template <typename T>
class BatchNorm2dT {
 public:
  explicit BatchNorm2dT(int c, T momentum = T(0.1), T eps = T(1e-5));

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

  void set_train(bool train) { train_ = train; }
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);
  void drop_cache() { xhat_ = TensorT<T>(); }

  TensorT<T>& running_mean() { return running_mean_; }
  TensorT<T>& running_var() { return running_var_; }

 private:
  int c_;
  T momentum_, eps_;
  bool train_ = true;
  TensorT<T> gamma_, beta_, ggamma_, gbeta_;
  TensorT<T> running_mean_, running_var_;
  TensorT<T> xhat_;            // cached normalized input
  std::vector<T> inv_std_;     // per-channel 1/sqrt(var + eps) used in forward
};

template <typename T>
class ReluT {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void drop_cache() { y_ = TensorT<T>(); }

 private:
  TensorT<T> y_;
};

template <typename T>
class SigmoidT {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void drop_cache() { y_ = TensorT<T>(); }

 private:
  TensorT<T> y_;
};

// Max pooling, kernel = stride (non-overlapping); trailing rows/cols that do
// not fill a window are dropped.
template <typename T>
class MaxPool2dT {
 public:
  explicit MaxPool2dT(int k) : k_(k) {}
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void drop_cache() { argmax_.clear(); argmax_.shrink_to_fit(); }

 private:
  int k_;
  std::array<int, 4> in_shape_{};
  std::vector<int> argmax_;  // flat HW index per output element
};

// (N, C, H, W) -> (N, C, 1, 1) mean over the spatial plane.
template <typename T>
class GlobalAvgPoolT {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

 private:
  std::array<int, 4> in_shape_{};
};

// (N, C, H, W) -> (N, C, 1, 1) max over the spatial plane.
template <typename T>
class GlobalMaxPoolT {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

 private:
  std::array<int, 4> in_shape_{};
  std::vector<int> argmax_;
};

// (N, C, H, W) -> (N, 2, H, W): channel 0 = mean over C, channel 1 = max
// over C. Used by spatial attention.
template <typename T>
class ChannelPoolT {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);

 private:
  std::array<int, 4> in_shape_{};
  std::vector<int> argmax_;  // winning channel per (n, y, x)
};

// Reflection padding (edge pixel not repeated) and its adjoint.
template <typename T>
TensorT<T> reflect_pad(const TensorT<T>& x, int pt, int pb, int pl, int pr);
template <typename T>
TensorT<T> reflect_pad_adjoint(const TensorT<T>& g, int pt, int pb, int pl, int pr);

// Normalized 1-D Gaussian taps.
template <typename T>
std::vector<T> gaussian_kernel1d(int size, double sigma);

// Per-channel separable Gaussian blur with reflection padding, and its
// adjoint (exact transpose, including the padding).
template <typename T>
TensorT<T> gaussian_blur_reflect(const TensorT<T>& x, const std::vector<T>& k);
template <typename T>
TensorT<T> gaussian_blur_reflect_adjoint(const TensorT<T>& g, const std::vector<T>& k);

// Channel concatenation of two tensors and the matching split of a gradient.
template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
void split_channels(const TensorT<T>& g, TensorT<T>& ga, TensorT<T>& gb);

extern template class Conv2dT<float>;
extern template class Conv2dT<double>;
extern template class ConvTranspose2dT<float>;
extern template class ConvTranspose2dT<double>;
extern template class BatchNorm2dT<float>;
extern template class BatchNorm2dT<double>;
extern template class ReluT<float>;
extern template class ReluT<double>;
extern template class SigmoidT<float>;
extern template class SigmoidT<double>;
extern template class MaxPool2dT<float>;
extern template class MaxPool2dT<double>;
extern template class GlobalAvgPoolT<float>;
extern template class GlobalAvgPoolT<double>;
extern template class GlobalMaxPoolT<float>;
extern template class GlobalMaxPoolT<double>;
extern template class ChannelPoolT<float>;
extern template class ChannelPoolT<double>;

using Conv2d = Conv2dT<float>;
using ConvTranspose2d = ConvTranspose2dT<float>;
using BatchNorm2d = BatchNorm2dT<float>;
using Relu = ReluT<float>;
using Sigmoid = SigmoidT<float>;
using MaxPool2d = MaxPool2dT<float>;

}  // namespace gated
