#include "gated/agcm.hpp"

#include <cmath>

namespace gated {

// ------------------------------------------------------------------ FEB ----

template <typename T>
FebT<T>::FebT(Rng& rng)
    : conv1_(3, 32, 3, 1, 1, true, rng),
      conv2_(32, 32, 3, 1, 1, true, rng),
      conv3_(32, 32, 3, 1, 1, true, rng),
      bn1_(32),
      bn2_(32),
      bn3_(32) {}

template <typename T>
TensorT<T> FebT<T>::forward(const TensorT<T>& x) {
  if (x.c() != 3) throw ShapeError("feb: expected 3-channel input, got " + x.shape_str());
  TensorT<T> h = relu1_.forward(bn1_.forward(conv1_.forward(x)));
  h = relu2_.forward(bn2_.forward(conv2_.forward(h)));
  return relu3_.forward(bn3_.forward(conv3_.forward(h)));
}

template <typename T>
TensorT<T> FebT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> g = conv3_.backward(bn3_.backward(relu3_.backward(gy)));
  g = conv2_.backward(bn2_.backward(relu2_.backward(g)));
  return conv1_.backward(bn1_.backward(relu1_.backward(g)));
}

template <typename T>
void FebT<T>::set_train(bool train) {
  bn1_.set_train(train);
  bn2_.set_train(train);
  bn3_.set_train(train);
}

template <typename T>
void FebT<T>::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  conv3_.zero_grad();
  bn1_.zero_grad();
  bn2_.zero_grad();
  bn3_.zero_grad();
}

template <typename T>
void FebT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  conv1_.collect_state(prefix + ".conv1", out);
  bn1_.collect_state(prefix + ".bn1", out);
  conv2_.collect_state(prefix + ".conv2", out);
  bn2_.collect_state(prefix + ".bn2", out);
  conv3_.collect_state(prefix + ".conv3", out);
  bn3_.collect_state(prefix + ".bn3", out);
}

// ------------------------------------------------------------------ GCB ----

template <typename T>
GcbT<T>::GcbT(Rng& rng)
    : fc1_(32, 16, 1, 1, 0, true, rng), fc2_(16, 32, 1, 1, 0, true, rng) {}

template <typename T>
TensorT<T> GcbT<T>::forward(const TensorT<T>& x) {
  if (x.c() != 32) throw ShapeError("gcb: expected 32-channel input, got " + x.shape_str());
  x_ = x;
  gate_ = sig_.forward(fc2_.forward(relu_.forward(fc1_.forward(pool_.forward(x)))));
  TensorT<T> y(x.n(), x.c(), x.h(), x.w());
  const int plane = x.h() * x.w();
  for (int in = 0; in < x.n(); ++in)
    for (int ic = 0; ic < x.c(); ++ic) {
      const T g = gate_.at(in, ic, 0, 0);
      const T* src = x.plane(in, ic);
      T* dst = y.plane(in, ic);
      for (int i = 0; i < plane; ++i) dst[i] = src[i] * g;
    }
  return y;
}

template <typename T>
TensorT<T> GcbT<T>::backward(const TensorT<T>& gy) {
  const int n = x_.n(), c = x_.c(), plane = x_.h() * x_.w();
  TensorT<T> ggate(n, c, 1, 1);
  TensorT<T> gx(n, c, x_.h(), x_.w());
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* g = gy.plane(in, ic);
      const T* src = x_.plane(in, ic);
      T* dst = gx.plane(in, ic);
      const T gate = gate_.at(in, ic, 0, 0);
      double s = 0.0;
      for (int i = 0; i < plane; ++i) {
        s += static_cast<double>(g[i]) * src[i];
        dst[i] = g[i] * gate;
      }
      ggate.at(in, ic, 0, 0) = static_cast<T>(s);
    }
  TensorT<T> gp =
      pool_.backward(fc1_.backward(relu_.backward(fc2_.backward(sig_.backward(ggate)))));
  for (size_t i = 0; i < gx.numel(); ++i) gx[i] += gp[i];
  return gx;
}

template <typename T>
void GcbT<T>::zero_grad() {
  fc1_.zero_grad();
  fc2_.zero_grad();
}

template <typename T>
void GcbT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  fc1_.collect_state(prefix + ".fc1", out);
  fc2_.collect_state(prefix + ".fc2", out);
}

// ---------------------------------------------------------- power law ------

template <typename T>
TensorT<T> GammaApplyT<T>::forward(const TensorT<T>& v, const TensorT<T>& gamma) {
  check_same_shape(v, gamma, "apply_gamma");
  v_ = v;
  gamma_ = gamma;
  raw_ = TensorT<T>(v.n(), v.c(), v.h(), v.w());
  TensorT<T> y(v.n(), v.c(), v.h(), v.w());
  for (size_t i = 0; i < v.numel(); ++i) {
    const T r = std::pow(v[i] + kEps, gamma[i]);
    raw_[i] = r;
    y[i] = r < T(0) ? T(0) : (r > T(1) ? T(1) : r);
  }
  return y;
}

template <typename T>
void GammaApplyT<T>::backward(const TensorT<T>& gy, TensorT<T>& gv, TensorT<T>& ggamma) const {
  gv = TensorT<T>(v_.n(), v_.c(), v_.h(), v_.w());
  ggamma = TensorT<T>(v_.n(), v_.c(), v_.h(), v_.w());
  for (size_t i = 0; i < gy.numel(); ++i) {
    if (raw_[i] > T(1) || raw_[i] < T(0)) continue;  // clamped: zero gradient
    const T base = v_[i] + kEps;
    gv[i] = gy[i] * gamma_[i] * raw_[i] / base;
    ggamma[i] = gy[i] * raw_[i] * std::log(base);
  }
}

template <typename T>
TensorT<T> apply_gamma(const TensorT<T>& v, const TensorT<T>& gamma) {
  GammaApplyT<T> op;
  return op.forward(v, gamma);
}

template TensorT<float> apply_gamma<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> apply_gamma<double>(const TensorT<double>&, const TensorT<double>&);

// ----------------------------------------------------------------- AGCM ----

template <typename T>
AgcmT<T>::AgcmT(Rng& rng) : feb_(rng), gcb_(rng), head_(32, 3, 1, 1, 0, true, rng) {}

template <typename T>
AgcmOutT<T> AgcmT<T>::forward(const TensorT<T>& img) {
  TensorT<T> ctx = gcb_.forward(feb_.forward(img));
  TensorT<T> s = head_sig_.forward(head_.forward(ctx));
  TensorT<T> gamma(s.n(), s.c(), s.h(), s.w());
  for (size_t i = 0; i < s.numel(); ++i) gamma[i] = T(0.5) + T(1.5) * s[i];
  AgcmOutT<T> out;
  out.image = apply_.forward(img, gamma);
  out.gamma = std::move(gamma);
  return out;
}

template <typename T>
TensorT<T> AgcmT<T>::backward(const TensorT<T>& g_image, const TensorT<T>& g_gamma) {
  TensorT<T> gv, ggamma;
  if (!g_image.empty()) {
    apply_.backward(g_image, gv, ggamma);
  }
  if (!g_gamma.empty()) {
    if (ggamma.empty()) {
      ggamma = g_gamma;
    } else {
      for (size_t i = 0; i < ggamma.numel(); ++i) ggamma[i] += g_gamma[i];
    }
  }
  // gamma = 0.5 + 1.5 * sigmoid(logits)
  for (size_t i = 0; i < ggamma.numel(); ++i) ggamma[i] *= T(1.5);
  TensorT<T> gctx = head_.backward(head_sig_.backward(ggamma));
  TensorT<T> gin = feb_.backward(gcb_.backward(gctx));
  if (!gv.empty())
    for (size_t i = 0; i < gin.numel(); ++i) gin[i] += gv[i];
  return gin;
}

template <typename T>
void AgcmT<T>::set_train(bool train) {
  feb_.set_train(train);
}

template <typename T>
void AgcmT<T>::zero_grad() {
  feb_.zero_grad();
  gcb_.zero_grad();
  head_.zero_grad();
}

template <typename T>
void AgcmT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  feb_.collect_state(prefix + ".feb", out);
  gcb_.collect_state(prefix + ".gcb", out);
  head_.collect_state(prefix + ".head", out);
}

template class FebT<float>;
template class FebT<double>;
template class GcbT<float>;
template class GcbT<double>;
template class GammaApplyT<float>;
template class GammaApplyT<double>;
template class AgcmT<float>;
template class AgcmT<double>;

}  // namespace gated
