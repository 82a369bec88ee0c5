#pragma once

#include <map>
#include <string>

#include "gated/tensor.hpp"

namespace gated {

// SSIM statistics: local 11x11 Gaussian windows (the standard convention) or
// whole-plane global statistics (ablation mode).
enum class SsimMode { windowed, global };

template <typename T>
struct LossWeightsT {
  T alpha = T(0.5);          // L1
  T beta = T(0.2);           // SSIM loss
  T gamma_w = T(0.2);        // TV
  T delta = T(0.1);          // color constancy
  T lambda_c = T(0.5);       // inside color term
  T lambda_gamma = T(0.1);   // inside gamma regularizer
  T lambda_tv = T(1);        // inside TV term
  T gamma_target = T(1);     // regularizer target
  T stage1_weight = T(0.3);
  T stage2_weight = T(0.7);
  SsimMode ssim_mode = SsimMode::windowed;
};

// Per-stage record; term values are the raw op outputs (internal lambdas
// included, stage weights alpha..delta not applied).
template <typename T>
struct StageTermsT {
  T l1 = 0, ssim = 0, tv = 0, color = 0, gamma_reg = 0;
  T total = 0;
};

template <typename T>
struct LossBreakdownT {
  StageTermsT<T> stage1, stage2;
  T total = 0;
  std::map<std::string, T> flat() const;
};

using LossWeights = LossWeightsT<float>;
using LossBreakdown = LossBreakdownT<float>;

// Every loss reduces per sample first, then takes the batch mean. Gradient
// variants accumulate w * dL/dpred into the provided tensor and return the
// loss value.

template <typename T>
T l1_loss(const TensorT<T>& pred, const TensorT<T>& target);
template <typename T>
T l1_loss_backward(const TensorT<T>& pred, const TensorT<T>& target, T w, TensorT<T>& gpred);

// Mean SSIM index in [-1, 1]; C1 = 1e-4, C2 = 9e-4.
template <typename T>
T ssim(const TensorT<T>& x, const TensorT<T>& y, SsimMode mode = SsimMode::windowed);
// Accumulates w * dSSIM/dx (note: SSIM itself, not the loss).
template <typename T>
T ssim_backward(const TensorT<T>& x, const TensorT<T>& y, SsimMode mode, T w, TensorT<T>& gx);

template <typename T>
T ssim_loss(const TensorT<T>& pred, const TensorT<T>& target,
            SsimMode mode = SsimMode::windowed);

// Sum of squared neighbor differences normalized by C*H*W, times lambda_tv.
template <typename T>
T tv_loss(const TensorT<T>& img, T lambda_tv = T(1));
template <typename T>
T tv_loss_backward(const TensorT<T>& img, T lambda_tv, T w, TensorT<T>& g);

// lambda_c * sum of pairwise squared differences of channel means.
template <typename T>
T color_constancy_loss(const TensorT<T>& img, T lambda_c = T(0.5));
template <typename T>
T color_constancy_loss_backward(const TensorT<T>& img, T lambda_c, T w, TensorT<T>& g);

// lambda_gamma * (mean(gamma) - target)^2.
template <typename T>
T gamma_reg_loss(const TensorT<T>& gamma, T lambda_gamma = T(0.1), T target = T(1));
template <typename T>
T gamma_reg_loss_backward(const TensorT<T>& gamma, T lambda_gamma, T target, T w, TensorT<T>& g);

// Weighted stage objective: alpha*L1 + beta*(1-SSIM) + gamma_w*TV +
// delta*color + gamma-regularizer (only when a gamma map is supplied).
template <typename T>
StageTermsT<T> stage_loss(const TensorT<T>& pred, const TensorT<T>& target,
                          const TensorT<T>* gamma, const LossWeightsT<T>& w);
// outer scales the gradients (stage weight); ggamma may be null when gamma is.
template <typename T>
StageTermsT<T> stage_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                                   const TensorT<T>* gamma, const LossWeightsT<T>& w, T outer,
                                   TensorT<T>& gpred, TensorT<T>* ggamma);

// Dual-stage composite: stage1 on the gamma-corrected image (with the
// regularizer), stage2 on the refined image, blended by the stage weights.
template <typename T>
LossBreakdownT<T> total_loss(const TensorT<T>& stage1_img, const TensorT<T>& final_img,
                             const TensorT<T>& target, const TensorT<T>& gamma,
                             const LossWeightsT<T>& w);
template <typename T>
LossBreakdownT<T> total_loss_backward(const TensorT<T>& stage1_img, const TensorT<T>& final_img,
                                      const TensorT<T>& target, const TensorT<T>& gamma,
                                      const LossWeightsT<T>& w, TensorT<T>& g_stage1,
                                      TensorT<T>& g_final, TensorT<T>& g_gamma);

}  // namespace gated
