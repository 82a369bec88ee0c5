#pragma once

#include "gated/layers.hpp"

namespace gated {

// Feature extraction: three 3x3 conv -> batch-norm -> ReLU stages,
// 3 -> 32 -> 32 -> 32 channels, padding 1 (spatial size preserved).
template <typename T>
class FebT {
 public:
  explicit FebT(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void set_train(bool train);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

 private:
  Conv2dT<T> conv1_, conv2_, conv3_;
  BatchNorm2dT<T> bn1_, bn2_, bn3_;
  ReluT<T> relu1_, relu2_, relu3_;
};

// Global context gating: squeeze to a global descriptor by average pooling,
// then 1x1 convs 32 -> 16 -> 32 with ReLU between and a sigmoid gate; the
// feature map is scaled per channel by the gate.
template <typename T>
class GcbT {
 public:
  explicit GcbT(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

  const TensorT<T>& gate() const { return gate_; }  // (N, 32, 1, 1), values in (0,1)

 private:
  GlobalAvgPoolT<T> pool_;
  Conv2dT<T> fc1_, fc2_;
  ReluT<T> relu_;
  SigmoidT<T> sig_;
  TensorT<T> x_, gate_;
};

// Elementwise power law y = clamp((v + 1e-6)^gamma, 0, 1), differentiable in
// both v and gamma (clamped elements get zero gradient).
template <typename T>
class GammaApplyT {
 public:
  static constexpr T kEps = T(1e-6);

  TensorT<T> forward(const TensorT<T>& v, const TensorT<T>& gamma);
  void backward(const TensorT<T>& gy, TensorT<T>& gv, TensorT<T>& ggamma) const;

 private:
  TensorT<T> v_, gamma_, raw_;  // raw = pre-clamp power
};

// Stateless convenience wrapper.
template <typename T>
TensorT<T> apply_gamma(const TensorT<T>& v, const TensorT<T>& gamma);

template <typename T>
struct AgcmOutT {
  TensorT<T> image;  // gamma-corrected image in [0,1]
  TensorT<T> gamma;  // (N, 3, H, W) exponent map in [0.5, 2.0]
};

// Stage 1: predicts gamma = 0.5 + 1.5 * sigmoid(Conv1x1(GCB(FEB(x)))) and
// applies the power law pixel-wise.
template <typename T>
class AgcmT {
 public:
  explicit AgcmT(Rng& rng);

  AgcmOutT<T> forward(const TensorT<T>& img);
  // g_image: gradient on the corrected image; g_gamma: extra gradient on the
  // gamma map (e.g. from its regularizer); either may be empty. Returns the
  // gradient on the input image.
  TensorT<T> backward(const TensorT<T>& g_image, const TensorT<T>& g_gamma);

  void set_train(bool train);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

  FebT<T>& feb() { return feb_; }
  GcbT<T>& gcb() { return gcb_; }
  Conv2dT<T>& head() { return head_; }

 private:
  FebT<T> feb_;
  GcbT<T> gcb_;
  Conv2dT<T> head_;
  SigmoidT<T> head_sig_;
  GammaApplyT<T> apply_;
};

extern template class FebT<float>;
extern template class FebT<double>;
extern template class GcbT<float>;
extern template class GcbT<double>;
extern template class GammaApplyT<float>;
extern template class GammaApplyT<double>;
extern template class AgcmT<float>;
extern template class AgcmT<double>;

using Agcm = AgcmT<float>;
using AgcmOut = AgcmOutT<float>;

}  // namespace gated
