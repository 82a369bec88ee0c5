#include "gated/cbam.hpp"

#include <cmath>

namespace gated {

// ------------------------------------------------------ ChannelAttention ---

template <typename T>
ChannelAttentionT<T>::ChannelAttentionT(int c, int reduction, Rng& rng)
    : c_(c),
      cr_(0),
      w1_(),
      b1_(),
      w2_(),
      b2_() {
  const int r = effective_reduction(c, reduction);
  if (c % r != 0)
    throw ShapeError("channel attention: C=" + std::to_string(c) +
                     " not divisible by reduction r=" + std::to_string(r));
  cr_ = c / r;
  w1_ = TensorT<T>(cr_, c_, 1, 1);
  b1_ = TensorT<T>(1, cr_, 1, 1);
  w2_ = TensorT<T>(c_, cr_, 1, 1);
  b2_ = TensorT<T>(1, c_, 1, 1);
  gw1_ = TensorT<T>(cr_, c_, 1, 1);
  gb1_ = TensorT<T>(1, cr_, 1, 1);
  gw2_ = TensorT<T>(c_, cr_, 1, 1);
  gb2_ = TensorT<T>(1, c_, 1, 1);
  he_normal_init(w1_, c_, rng);
  he_normal_init(w2_, cr_, rng);
}

template <typename T>
TensorT<T> ChannelAttentionT<T>::mlp(const TensorT<T>& d, TensorT<T>& hidden) const {
  const int n = d.n();
  hidden = TensorT<T>(n, cr_, 1, 1);
  TensorT<T> out(n, c_, 1, 1);
  for (int in = 0; in < n; ++in) {
    for (int j = 0; j < cr_; ++j) {
      T s = b1_[j];
      for (int ic = 0; ic < c_; ++ic) s += w1_[static_cast<size_t>(j) * c_ + ic] * d.at(in, ic, 0, 0);
      hidden.at(in, j, 0, 0) = s > T(0) ? s : T(0);
    }
    for (int oc = 0; oc < c_; ++oc) {
      T s = b2_[oc];
      for (int j = 0; j < cr_; ++j) s += w2_[static_cast<size_t>(oc) * cr_ + j] * hidden.at(in, j, 0, 0);
      out.at(in, oc, 0, 0) = s;
    }
  }
  return out;
}

template <typename T>
TensorT<T> ChannelAttentionT<T>::forward(const TensorT<T>& x) {
  x_ = x;
  da_ = avg_.forward(x);
  dm_ = max_.forward(x);
  TensorT<T> la = mlp(da_, ha_);
  TensorT<T> lm = mlp(dm_, hm_);
  gate_ = TensorT<T>(x.n(), c_, 1, 1);
  for (size_t i = 0; i < gate_.numel(); ++i)
    gate_[i] = T(1) / (T(1) + std::exp(-(la[i] + lm[i])));

  TensorT<T> y(x.n(), x.c(), x.h(), x.w());
  const int plane = x.h() * x.w();
  for (int in = 0; in < x.n(); ++in)
    for (int ic = 0; ic < c_; ++ic) {
      const T g = gate_.at(in, ic, 0, 0);
      const T* src = x.plane(in, ic);
      T* dst = y.plane(in, ic);
      for (int i = 0; i < plane; ++i) dst[i] = src[i] * g;
    }
  return y;
}

template <typename T>
TensorT<T> ChannelAttentionT<T>::backward(const TensorT<T>& gy) {
  const int n = x_.n(), plane = x_.h() * x_.w();

  // Gate gradient and the direct input path.
  TensorT<T> gl(n, c_, 1, 1);
  TensorT<T> gx(x_.n(), x_.c(), x_.h(), x_.w());
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c_; ++ic) {
      const T* g = gy.plane(in, ic);
      const T* src = x_.plane(in, ic);
      T* dst = gx.plane(in, ic);
      const T gate = gate_.at(in, ic, 0, 0);
      double s = 0.0;
      for (int i = 0; i < plane; ++i) {
        s += static_cast<double>(g[i]) * src[i];
        dst[i] = g[i] * gate;
      }
      gl.at(in, ic, 0, 0) = static_cast<T>(s) * gate * (T(1) - gate);
    }

  // Shared-MLP backward for both pooled paths.
  TensorT<T> gda(n, c_, 1, 1), gdm(n, c_, 1, 1);
  for (int in = 0; in < n; ++in) {
    for (int pass = 0; pass < 2; ++pass) {
      const TensorT<T>& h = pass == 0 ? ha_ : hm_;
      const TensorT<T>& d = pass == 0 ? da_ : dm_;
      TensorT<T>& gd = pass == 0 ? gda : gdm;
      for (int oc = 0; oc < c_; ++oc) {
        const T g = gl.at(in, oc, 0, 0);
        gb2_[oc] += g;
        for (int j = 0; j < cr_; ++j)
          gw2_[static_cast<size_t>(oc) * cr_ + j] += g * h.at(in, j, 0, 0);
      }
      for (int j = 0; j < cr_; ++j) {
        if (h.at(in, j, 0, 0) <= T(0)) continue;  // ReLU mask
        T gh = 0;
        for (int oc = 0; oc < c_; ++oc)
          gh += w2_[static_cast<size_t>(oc) * cr_ + j] * gl.at(in, oc, 0, 0);
        gb1_[j] += gh;
        for (int ic = 0; ic < c_; ++ic) {
          gw1_[static_cast<size_t>(j) * c_ + ic] += gh * d.at(in, ic, 0, 0);
          gd.at(in, ic, 0, 0) += gh * w1_[static_cast<size_t>(j) * c_ + ic];
        }
      }
    }
  }

  TensorT<T> ga = avg_.backward(gda);
  TensorT<T> gm = max_.backward(gdm);
  for (size_t i = 0; i < gx.numel(); ++i) gx[i] += ga[i] + gm[i];
  return gx;
}

template <typename T>
void ChannelAttentionT<T>::zero_grad() {
  gw1_.zero();
  gb1_.zero();
  gw2_.zero();
  gb2_.zero();
}

template <typename T>
void ChannelAttentionT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  out.push_back({prefix + ".fc1.weight", &w1_, &gw1_, true});
  out.push_back({prefix + ".fc1.bias", &b1_, &gb1_, true});
  out.push_back({prefix + ".fc2.weight", &w2_, &gw2_, true});
  out.push_back({prefix + ".fc2.bias", &b2_, &gb2_, true});
}

// ------------------------------------------------------ SpatialAttention ---

template <typename T>
SpatialAttentionT<T>::SpatialAttentionT(Rng& rng) : conv_(2, 1, 7, 1, 3, true, rng) {}

template <typename T>
TensorT<T> SpatialAttentionT<T>::forward(const TensorT<T>& x) {
  x_ = x;
  gate_ = sig_.forward(conv_.forward(pool_.forward(x)));
  TensorT<T> y(x.n(), x.c(), x.h(), x.w());
  const int plane = x.h() * x.w();
  for (int in = 0; in < x.n(); ++in) {
    const T* g = gate_.plane(in, 0);
    for (int ic = 0; ic < x.c(); ++ic) {
      const T* src = x.plane(in, ic);
      T* dst = y.plane(in, ic);
      for (int i = 0; i < plane; ++i) dst[i] = src[i] * g[i];
    }
  }
  return y;
}

template <typename T>
TensorT<T> SpatialAttentionT<T>::backward(const TensorT<T>& gy) {
  const int n = x_.n(), c = x_.c(), plane = x_.h() * x_.w();
  TensorT<T> ggate(n, 1, x_.h(), x_.w());
  TensorT<T> gx(n, c, x_.h(), x_.w());
  for (int in = 0; in < n; ++in) {
    const T* g = gate_.plane(in, 0);
    T* gg = ggate.plane(in, 0);
    for (int ic = 0; ic < c; ++ic) {
      const T* gyp = gy.plane(in, ic);
      const T* src = x_.plane(in, ic);
      T* dst = gx.plane(in, ic);
      for (int i = 0; i < plane; ++i) {
        gg[i] += gyp[i] * src[i];
        dst[i] = gyp[i] * g[i];
      }
    }
  }
  TensorT<T> gp = pool_.backward(conv_.backward(sig_.backward(ggate)));
  for (size_t i = 0; i < gx.numel(); ++i) gx[i] += gp[i];
  return gx;
}

template <typename T>
void SpatialAttentionT<T>::zero_grad() {
  conv_.zero_grad();
}

template <typename T>
void SpatialAttentionT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  conv_.collect_state(prefix + ".conv", out);
}

// ----------------------------------------------------------------- CBAM ----

template <typename T>
CbamT<T>::CbamT(int c, Rng& rng, int reduction) : channel_(c, reduction, rng), spatial_(rng) {}

template <typename T>
TensorT<T> CbamT<T>::forward(const TensorT<T>& x) {
  return spatial_.forward(channel_.forward(x));
}

template <typename T>
TensorT<T> CbamT<T>::backward(const TensorT<T>& gy) {
  return channel_.backward(spatial_.backward(gy));
}

template <typename T>
void CbamT<T>::zero_grad() {
  channel_.zero_grad();
  spatial_.zero_grad();
}

template <typename T>
void CbamT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  channel_.collect_state(prefix + ".channel", out);
  spatial_.collect_state(prefix + ".spatial", out);
}

template class ChannelAttentionT<float>;
template class ChannelAttentionT<double>;
template class SpatialAttentionT<float>;
template class SpatialAttentionT<double>;
template class CbamT<float>;
template class CbamT<double>;

}  // namespace gated
