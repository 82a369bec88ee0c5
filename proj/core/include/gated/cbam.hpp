#pragma once

#include "gated/layers.hpp"

namespace gated {

// Channel attention: gate = sigmoid(MLP(avgpool(x)) + MLP(maxpool(x))),
// MLP = C -> C/r -> C with ReLU between, weights shared by both pooled
// descriptors. Output is x scaled per channel by the gate.
template <typename T>
class ChannelAttentionT {
 public:
  ChannelAttentionT(int c, int reduction, Rng& rng);

  // r = 16, except r = max(1, C/8) for narrow blocks (C < 16).
  static int effective_reduction(int c, int r = 16) { return c < 16 ? std::max(1, c / 8) : r; }

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);
  const TensorT<T>& gate() const { return gate_; }

 private:
  // y = W2 * relu(W1 * d + b1) + b2 for a (N, C, 1, 1) descriptor.
  TensorT<T> mlp(const TensorT<T>& d, TensorT<T>& hidden) const;

  int c_, cr_;
  TensorT<T> w1_, b1_, w2_, b2_;
  TensorT<T> gw1_, gb1_, gw2_, gb2_;
  GlobalAvgPoolT<T> avg_;
  GlobalMaxPoolT<T> max_;
  TensorT<T> x_, gate_;          // input and sigmoid gate (N, C, 1, 1)
  TensorT<T> da_, dm_, ha_, hm_; // descriptors and post-ReLU hiddens
};

// Spatial attention: gate = sigmoid(Conv7x7(concat(mean_c(x), max_c(x)))),
// broadcast over channels.
template <typename T>
class SpatialAttentionT {
 public:
  explicit SpatialAttentionT(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);
  const TensorT<T>& gate() const { return gate_; }

 private:
  ChannelPoolT<T> pool_;
  Conv2dT<T> conv_;
  SigmoidT<T> sig_;
  TensorT<T> x_, gate_;  // input and gate (N, 1, H, W)
};

// Channel attention followed by spatial attention; the fixed order matters.
template <typename T>
class CbamT {
 public:
  CbamT(int c, Rng& rng, int reduction = 16);

  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& gy);
  void zero_grad();
  void collect_state(const std::string& prefix, ParamListT<T>& out);

  ChannelAttentionT<T>& channel() { return channel_; }
  SpatialAttentionT<T>& spatial() { return spatial_; }

 private:
  ChannelAttentionT<T> channel_;
  SpatialAttentionT<T> spatial_;
};

extern template class ChannelAttentionT<float>;
extern template class ChannelAttentionT<double>;
extern template class SpatialAttentionT<float>;
extern template class SpatialAttentionT<double>;
extern template class CbamT<float>;
extern template class CbamT<double>;

using Cbam = CbamT<float>;

}  // namespace gated
