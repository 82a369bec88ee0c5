#pragma once

#include "gated/agcm.hpp"
#include "gated/cbam.hpp"
#include "gated/layers.hpp"

namespace gated {

// Two consecutive 3x3 conv -> batch-norm -> ReLU stages, padding 1.
template <typename T>
class DoubleConvT {
 public:
  DoubleConvT(int in_c, int out_c, Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void set_train(bool train);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

 private:
  Conv2dT<T> conv1_, conv2_;
  BatchNorm2dT<T> bn1_, bn2_;
  ReluT<T> relu1_, relu2_;
};

// Encoder stage: MaxPool(2) -> CBAM -> DoubleConv (doubling channels).
template <typename T>
struct EncStageT {
  EncStageT(int in_c, int out_c, Rng& rng) : cbam(in_c, rng), dc(in_c, out_c, rng) {}
  MaxPool2dT<T> pool{2};
  CbamT<T> cbam;
  DoubleConvT<T> dc;
};

// Decoder stage: ConvTranspose(2,2) halving channels -> concat skip ->
// CBAM -> DoubleConv (back to half width).
template <typename T>
struct DecStageT {
  DecStageT(int in_c, Rng& rng)
      : up(in_c, in_c / 2, 2, 2, rng), cbam(in_c, rng), dc(in_c, in_c / 2, rng) {}
  ConvTranspose2dT<T> up;
  CbamT<T> cbam;
  DoubleConvT<T> dc;
};

// Refinement U-Net: stem DoubleConv to 64 channels, four encoder stages to a
// 1024-wide bottleneck at 1/16 resolution, four decoder stages with skip
// concatenation, and a 1x1 conv + sigmoid head back to 3 channels.
template <typename T>
class RefineUnetT {
 public:
  explicit RefineUnetT(Rng& rng);

  // zero_skip in [0,4): that skip (0 = stem output) is zeroed before its
  // decoder concat — a sensitivity hook for tests; -1 disables.
  TensorT<T> forward(const TensorT<T>& x, int zero_skip = -1);
  TensorT<T> backward(const TensorT<T>& gy);

  void set_train(bool train);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

  const TensorT<T>& bottleneck() const { return bottleneck_; }
  const std::vector<TensorT<T>>& skips() const { return skips_; }

 private:
  DoubleConvT<T> stem_;
  EncStageT<T> enc1_, enc2_, enc3_, enc4_;
  DecStageT<T> dec1_, dec2_, dec3_, dec4_;  // dec1 consumes the bottleneck
  Conv2dT<T> head_;
  SigmoidT<T> head_sig_;
  std::vector<TensorT<T>> skips_;  // d0 (stem, full res) .. d3 (1/8 res)
  TensorT<T> bottleneck_;
};

template <typename T>
struct GatedOutT {
  TensorT<T> stage1;  // gamma-corrected image
  TensorT<T> gamma;   // exponent map
  TensorT<T> final;   // refined output
};

// Dual-stage model: gamma-correction stage followed by U-Net refinement.
template <typename T>
class GatedModelT {
 public:
  explicit GatedModelT(uint64_t seed);

  GatedOutT<T> forward(const TensorT<T>& img);
  // Gradients for the three outputs (any may be empty).
  void backward(const TensorT<T>& g_final, const TensorT<T>& g_stage1,
                const TensorT<T>& g_gamma);

  void set_train(bool train);
  void zero_grad();
  ParamListT<T> state();  // canonical names: agcm.*, unet.*
  size_t param_count();   // trainable scalars

  AgcmT<T>& agcm() { return agcm_; }
  RefineUnetT<T>& unet() { return unet_; }

 private:
  Rng rng_;
  AgcmT<T> agcm_;
  RefineUnetT<T> unet_;
};

extern template class DoubleConvT<float>;
extern template class DoubleConvT<double>;
extern template class RefineUnetT<float>;
extern template class RefineUnetT<double>;
extern template class GatedModelT<float>;
extern template class GatedModelT<double>;

using DoubleConv = DoubleConvT<float>;
using RefineUnet = RefineUnetT<float>;
using GatedModel = GatedModelT<float>;
using GatedOut = GatedOutT<float>;

}  // namespace gated
