#include "gated/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gated/blas.hpp"

namespace gated {

namespace {
// Scratch ceiling for im2col chunks (per buffer, in elements).
constexpr size_t kMaxColElems = size_t(8) << 20;

inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = (i < 0) ? -i : 2 * n - 2 - i;
  return i;
}
}  // namespace

template <typename T>
void he_normal_init(TensorT<T>& w, int fan_in, Rng& rng) {
  double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (size_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(rng.normal(0.0, std));
}

template <typename T>
void im2col_range(const T* src, int c, int h, int w, int kh, int kw, int sy, int sx, int py,
                  int px, int wo, int c0, int c1, T* col) {
  const int cols = c1 - c0;
  int r = 0;
  for (int ic = 0; ic < c; ++ic) {
    const T* plane = src + static_cast<size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++r) {
        T* out = col + static_cast<size_t>(r) * cols;
        for (int p = c0; p < c1; ++p) {
          const int oy = p / wo, ox = p % wo;
          const int iy = oy * sy - py + ky;
          const int ix = ox * sx - px + kx;
          out[p - c0] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                            ? plane[static_cast<size_t>(iy) * w + ix]
                            : T(0);
        }
      }
    }
  }
}

template <typename T>
void col2im_range(const T* col, int c, int h, int w, int kh, int kw, int sy, int sx, int py,
                  int px, int wo, int c0, int c1, T* dst) {
  const int cols = c1 - c0;
  int r = 0;
  for (int ic = 0; ic < c; ++ic) {
    T* plane = dst + static_cast<size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++r) {
        const T* in = col + static_cast<size_t>(r) * cols;
        for (int p = c0; p < c1; ++p) {
          const int oy = p / wo, ox = p % wo;
          const int iy = oy * sy - py + ky;
          const int ix = ox * sx - px + kx;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w)
            plane[static_cast<size_t>(iy) * w + ix] += in[p - c0];
        }
      }
    }
  }
}

// ---------------------------------------------------------------- Conv2d ---

template <typename T>
Conv2dT<T>::Conv2dT(int in_c, int out_c, int k, int stride, int pad, bool bias, Rng& rng)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      stride_(stride),
      pad_(pad),
      has_bias_(bias),
      weight_(out_c, in_c, k, k),
      bias_(bias ? 1 : 0, bias ? out_c : 0, bias ? 1 : 0, bias ? 1 : 0),
      gweight_(out_c, in_c, k, k),
      gbias_(bias ? 1 : 0, bias ? out_c : 0, bias ? 1 : 0, bias ? 1 : 0) {
  he_normal_init(weight_, in_c * k * k, rng);
}

template <typename T>
TensorT<T> Conv2dT<T>::forward(const TensorT<T>& x) {
  if (x.c() != in_c_)
    throw ShapeError("conv: expected " + std::to_string(in_c_) + " input channels, got " +
                     x.shape_str());
  const int n = x.n(), h = x.h(), w = x.w();
  const int ho = (h + 2 * pad_ - k_) / stride_ + 1;
  const int wo = (w + 2 * pad_ - k_) / stride_ + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv: input " + x.shape_str() + " too small");
  x_ = x;

  TensorT<T> y(n, out_c_, ho, wo);
  const int rows = in_c_ * k_ * k_;
  const int plane = ho * wo;
  const int chunk = std::max<int>(1, static_cast<int>(kMaxColElems / rows));
  std::vector<T> col(static_cast<size_t>(rows) * std::min(chunk, plane));

  for (int in = 0; in < n; ++in) {
    T* yp = y.plane(in, 0);
    if (has_bias_)
      for (int oc = 0; oc < out_c_; ++oc)
        std::fill(yp + static_cast<size_t>(oc) * plane, yp + static_cast<size_t>(oc + 1) * plane,
                  bias_[oc]);
    for (int c0 = 0; c0 < plane; c0 += chunk) {
      const int c1 = std::min(plane, c0 + chunk);
      im2col_range(x.plane(in, 0), in_c_, h, w, k_, k_, stride_, stride_, pad_, pad_, wo, c0, c1,
                   col.data());
      gemm<T>(false, false, out_c_, c1 - c0, rows, T(1), weight_.data(), rows, col.data(),
              c1 - c0, T(1), yp + c0, plane);
    }
  }
  return y;
}

template <typename T>
TensorT<T> Conv2dT<T>::backward(const TensorT<T>& gy) {
  const int n = x_.n(), h = x_.h(), w = x_.w();
  const int ho = gy.h(), wo = gy.w();
  const int rows = in_c_ * k_ * k_;
  const int plane = ho * wo;
  const int chunk = std::max<int>(1, static_cast<int>(kMaxColElems / rows));
  std::vector<T> col(static_cast<size_t>(rows) * std::min(chunk, plane));
  std::vector<T> gcol(col.size());

  TensorT<T> gx(n, in_c_, h, w);
  for (int in = 0; in < n; ++in) {
    const T* gyp = gy.plane(in, 0);
    for (int c0 = 0; c0 < plane; c0 += chunk) {
      const int c1 = std::min(plane, c0 + chunk);
      im2col_range(x_.plane(in, 0), in_c_, h, w, k_, k_, stride_, stride_, pad_, pad_, wo, c0, c1,
                   col.data());
      // dW += gY_chunk * col^T
      gemm<T>(false, true, out_c_, rows, c1 - c0, T(1), gyp + c0, plane, col.data(), c1 - c0,
              T(1), gweight_.data(), rows);
      // dcol = W^T * gY_chunk
      gemm<T>(true, false, rows, c1 - c0, out_c_, T(1), weight_.data(), rows, gyp + c0, plane,
              T(0), gcol.data(), c1 - c0);
      col2im_range(gcol.data(), in_c_, h, w, k_, k_, stride_, stride_, pad_, pad_, wo, c0, c1,
                   gx.plane(in, 0));
    }
    if (has_bias_)
      for (int oc = 0; oc < out_c_; ++oc) {
        const T* p = gyp + static_cast<size_t>(oc) * plane;
        T s = 0;
        for (int i = 0; i < plane; ++i) s += p[i];
        gbias_[oc] += s;
      }
  }
  return gx;
}

template <typename T>
void Conv2dT<T>::zero_grad() {
  gweight_.zero();
  gbias_.zero();
}

template <typename T>
void Conv2dT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  out.push_back({prefix + ".weight", &weight_, &gweight_, true});
  if (has_bias_) out.push_back({prefix + ".bias", &bias_, &gbias_, true});
}

// ------------------------------------------------------- ConvTranspose2d ---

template <typename T>
ConvTranspose2dT<T>::ConvTranspose2dT(int in_c, int out_c, int k, int stride, Rng& rng)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      stride_(stride),
      weight_(in_c, out_c, k, k),
      bias_(1, out_c, 1, 1),
      gweight_(in_c, out_c, k, k),
      gbias_(1, out_c, 1, 1) {
  he_normal_init(weight_, in_c * k * k, rng);
}

template <typename T>
TensorT<T> ConvTranspose2dT<T>::forward(const TensorT<T>& x) {
  if (x.c() != in_c_)
    throw ShapeError("conv_transpose: expected " + std::to_string(in_c_) +
                     " input channels, got " + x.shape_str());
  const int n = x.n(), h = x.h(), w = x.w();
  const int ho = (h - 1) * stride_ + k_;
  const int wo = (w - 1) * stride_ + k_;
  x_ = x;

  TensorT<T> y(n, out_c_, ho, wo);
  const int okk = out_c_ * k_ * k_;
  const int in_plane = h * w;
  const int out_plane = ho * wo;
  const int chunk = std::max<int>(1, static_cast<int>(kMaxColElems / okk));
  std::vector<T> col(static_cast<size_t>(okk) * std::min(chunk, in_plane));

  for (int in = 0; in < n; ++in) {
    T* yp = y.plane(in, 0);
    for (int oc = 0; oc < out_c_; ++oc)
      std::fill(yp + static_cast<size_t>(oc) * out_plane,
                yp + static_cast<size_t>(oc + 1) * out_plane, bias_[oc]);
    for (int c0 = 0; c0 < in_plane; c0 += chunk) {
      const int c1 = std::min(in_plane, c0 + chunk);
      // col = W^T * X_chunk, shape (out_c*k*k, chunk)
      gemm<T>(true, false, okk, c1 - c0, in_c_, T(1), weight_.data(), okk, x.plane(in, 0) + c0,
              in_plane, T(0), col.data(), c1 - c0);
      // Scatter patches onto the upsampled grid.
      col2im_range(col.data(), out_c_, ho, wo, k_, k_, stride_, stride_, 0, 0, w, c0, c1, yp);
    }
  }
  return y;
}

template <typename T>
TensorT<T> ConvTranspose2dT<T>::backward(const TensorT<T>& gy) {
  const int n = x_.n(), h = x_.h(), w = x_.w();
  const int ho = gy.h(), wo = gy.w();
  const int okk = out_c_ * k_ * k_;
  const int in_plane = h * w;
  const int chunk = std::max<int>(1, static_cast<int>(kMaxColElems / okk));
  std::vector<T> gcol(static_cast<size_t>(okk) * std::min(chunk, in_plane));

  TensorT<T> gx(n, in_c_, h, w);
  for (int in = 0; in < n; ++in) {
    const T* gyp = gy.plane(in, 0);
    for (int c0 = 0; c0 < in_plane; c0 += chunk) {
      const int c1 = std::min(in_plane, c0 + chunk);
      im2col_range(gyp, out_c_, ho, wo, k_, k_, stride_, stride_, 0, 0, w, c0, c1, gcol.data());
      // dX_chunk = W * dcol
      gemm<T>(false, false, in_c_, c1 - c0, okk, T(1), weight_.data(), okk, gcol.data(), c1 - c0,
              T(0), gx.plane(in, 0) + c0, in_plane);
      // dW += X_chunk * dcol^T
      gemm<T>(false, true, in_c_, okk, c1 - c0, T(1), x_.plane(in, 0) + c0, in_plane, gcol.data(),
              c1 - c0, T(1), gweight_.data(), okk);
    }
    const int out_plane = ho * wo;
    for (int oc = 0; oc < out_c_; ++oc) {
      const T* p = gyp + static_cast<size_t>(oc) * out_plane;
      T s = 0;
      for (int i = 0; i < out_plane; ++i) s += p[i];
      gbias_[oc] += s;
    }
  }
  return gx;
}

template <typename T>
void ConvTranspose2dT<T>::zero_grad() {
  gweight_.zero();
  gbias_.zero();
}

template <typename T>
void ConvTranspose2dT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  out.push_back({prefix + ".weight", &weight_, &gweight_, true});
  out.push_back({prefix + ".bias", &bias_, &gbias_, true});
}

// ----------------------------------------------------------- BatchNorm2d ---

template <typename T>
BatchNorm2dT<T>::BatchNorm2dT(int c, T momentum, T eps)
    : c_(c),
      momentum_(momentum),
      eps_(eps),
      gamma_(1, c, 1, 1, T(1)),
      beta_(1, c, 1, 1),
      ggamma_(1, c, 1, 1),
      gbeta_(1, c, 1, 1),
      running_mean_(1, c, 1, 1),
      running_var_(1, c, 1, 1, T(1)) {}

template <typename T>
TensorT<T> BatchNorm2dT<T>::forward(const TensorT<T>& x) {
  if (x.c() != c_) throw ShapeError("batch_norm: channel mismatch " + x.shape_str());
  const int n = x.n(), h = x.h(), w = x.w();
  const size_t cnt = static_cast<size_t>(n) * h * w;
  const int plane = h * w;

  xhat_ = TensorT<T>(n, c_, h, w);
  inv_std_.assign(c_, T(0));
  TensorT<T> y(n, c_, h, w);

  for (int ic = 0; ic < c_; ++ic) {
    T mean, var;
    if (train_) {
      double s = 0.0, s2 = 0.0;
      for (int in = 0; in < n; ++in) {
        const T* p = x.plane(in, ic);
        for (int i = 0; i < plane; ++i) {
          s += p[i];
          s2 += static_cast<double>(p[i]) * p[i];
        }
      }
      const double m = s / static_cast<double>(cnt);
      double v = s2 / static_cast<double>(cnt) - m * m;
      if (v < 0) v = 0;
      mean = static_cast<T>(m);
      var = static_cast<T>(v);
      const T unbiased = cnt > 1 ? static_cast<T>(v * cnt / (cnt - 1.0)) : var;
      running_mean_[ic] = (T(1) - momentum_) * running_mean_[ic] + momentum_ * mean;
      running_var_[ic] = (T(1) - momentum_) * running_var_[ic] + momentum_ * unbiased;
    } else {
      mean = running_mean_[ic];
      var = running_var_[ic];
    }
    const T is = T(1) / std::sqrt(var + eps_);
    inv_std_[ic] = is;
    const T g = gamma_[ic], b = beta_[ic];
    for (int in = 0; in < n; ++in) {
      const T* p = x.plane(in, ic);
      T* xh = xhat_.plane(in, ic);
      T* yp = y.plane(in, ic);
      for (int i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean) * is;
        yp[i] = g * xh[i] + b;
      }
    }
  }
  return y;
}

template <typename T>
TensorT<T> BatchNorm2dT<T>::backward(const TensorT<T>& gy) {
  const int n = xhat_.n(), h = xhat_.h(), w = xhat_.w();
  const size_t cnt = static_cast<size_t>(n) * h * w;
  const int plane = h * w;
  TensorT<T> gx(n, c_, h, w);

  for (int ic = 0; ic < c_; ++ic) {
    double sg = 0.0, sgx = 0.0;
    for (int in = 0; in < n; ++in) {
      const T* g = gy.plane(in, ic);
      const T* xh = xhat_.plane(in, ic);
      for (int i = 0; i < plane; ++i) {
        sg += g[i];
        sgx += static_cast<double>(g[i]) * xh[i];
      }
    }
    ggamma_[ic] += static_cast<T>(sgx);
    gbeta_[ic] += static_cast<T>(sg);
    const T scale = gamma_[ic] * inv_std_[ic];
    if (train_) {
      const T m1 = static_cast<T>(sg / static_cast<double>(cnt));
      const T m2 = static_cast<T>(sgx / static_cast<double>(cnt));
      for (int in = 0; in < n; ++in) {
        const T* g = gy.plane(in, ic);
        const T* xh = xhat_.plane(in, ic);
        T* o = gx.plane(in, ic);
        for (int i = 0; i < plane; ++i) o[i] = scale * (g[i] - m1 - xh[i] * m2);
      }
    } else {
      for (int in = 0; in < n; ++in) {
        const T* g = gy.plane(in, ic);
        T* o = gx.plane(in, ic);
        for (int i = 0; i < plane; ++i) o[i] = scale * g[i];
      }
    }
  }
  return gx;
}

template <typename T>
void BatchNorm2dT<T>::zero_grad() {
  ggamma_.zero();
  gbeta_.zero();
}

template <typename T>
void BatchNorm2dT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  out.push_back({prefix + ".weight", &gamma_, &ggamma_, true});
  out.push_back({prefix + ".bias", &beta_, &gbeta_, true});
  out.push_back({prefix + ".running_mean", &running_mean_, nullptr, false});
  out.push_back({prefix + ".running_var", &running_var_, nullptr, false});
}

// ----------------------------------------------------------- activations ---

template <typename T>
TensorT<T> ReluT<T>::forward(const TensorT<T>& x) {
  y_ = x;
  for (size_t i = 0; i < y_.numel(); ++i)
    if (y_[i] < T(0)) y_[i] = T(0);
  return y_;
}

template <typename T>
TensorT<T> ReluT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> gx = gy;
  for (size_t i = 0; i < gx.numel(); ++i)
    if (y_[i] <= T(0)) gx[i] = T(0);
  return gx;
}

template <typename T>
TensorT<T> SigmoidT<T>::forward(const TensorT<T>& x) {
  y_ = x;
  for (size_t i = 0; i < y_.numel(); ++i) y_[i] = T(1) / (T(1) + std::exp(-y_[i]));
  return y_;
}

template <typename T>
TensorT<T> SigmoidT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> gx = gy;
  for (size_t i = 0; i < gx.numel(); ++i) gx[i] *= y_[i] * (T(1) - y_[i]);
  return gx;
}

// --------------------------------------------------------------- pooling ---

template <typename T>
TensorT<T> MaxPool2dT<T>::forward(const TensorT<T>& x) {
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
  const int ho = h / k_, wo = w / k_;
  if (ho == 0 || wo == 0) throw ShapeError("max_pool: input " + x.shape_str() + " too small");
  in_shape_ = x.shape();
  TensorT<T> y(n, c, ho, wo);
  argmax_.assign(y.numel(), 0);
  size_t o = 0;
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* p = x.plane(in, ic);
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          int best_i = 0;
          for (int ky = 0; ky < k_; ++ky)
            for (int kx = 0; kx < k_; ++kx) {
              const int idx = (oy * k_ + ky) * w + ox * k_ + kx;
              if (p[idx] > best) {
                best = p[idx];
                best_i = idx;
              }
            }
          y[o] = best;
          argmax_[o] = best_i;
        }
    }
  return y;
}

template <typename T>
TensorT<T> MaxPool2dT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  const int ho = gy.h(), wo = gy.w();
  size_t o = 0;
  for (int in = 0; in < gy.n(); ++in)
    for (int ic = 0; ic < gy.c(); ++ic) {
      T* p = gx.plane(in, ic);
      for (int i = 0; i < ho * wo; ++i, ++o) p[argmax_[o]] += gy[o];
    }
  return gx;
}

template <typename T>
TensorT<T> GlobalAvgPoolT<T>::forward(const TensorT<T>& x) {
  in_shape_ = x.shape();
  const int plane = x.h() * x.w();
  TensorT<T> y(x.n(), x.c(), 1, 1);
  for (int in = 0; in < x.n(); ++in)
    for (int ic = 0; ic < x.c(); ++ic) {
      const T* p = x.plane(in, ic);
      double s = 0.0;
      for (int i = 0; i < plane; ++i) s += p[i];
      y.at(in, ic, 0, 0) = static_cast<T>(s / plane);
    }
  return y;
}

template <typename T>
TensorT<T> GlobalAvgPoolT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  const int plane = in_shape_[2] * in_shape_[3];
  const T inv = T(1) / static_cast<T>(plane);
  for (int in = 0; in < gx.n(); ++in)
    for (int ic = 0; ic < gx.c(); ++ic) {
      T* p = gx.plane(in, ic);
      const T g = gy.at(in, ic, 0, 0) * inv;
      for (int i = 0; i < plane; ++i) p[i] = g;
    }
  return gx;
}

template <typename T>
TensorT<T> GlobalMaxPoolT<T>::forward(const TensorT<T>& x) {
  in_shape_ = x.shape();
  const int plane = x.h() * x.w();
  TensorT<T> y(x.n(), x.c(), 1, 1);
  argmax_.assign(static_cast<size_t>(x.n()) * x.c(), 0);
  for (int in = 0; in < x.n(); ++in)
    for (int ic = 0; ic < x.c(); ++ic) {
      const T* p = x.plane(in, ic);
      int best = 0;
      for (int i = 1; i < plane; ++i)
        if (p[i] > p[best]) best = i;
      y.at(in, ic, 0, 0) = p[best];
      argmax_[static_cast<size_t>(in) * x.c() + ic] = best;
    }
  return y;
}

template <typename T>
TensorT<T> GlobalMaxPoolT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  for (int in = 0; in < gx.n(); ++in)
    for (int ic = 0; ic < gx.c(); ++ic)
      gx.plane(in, ic)[argmax_[static_cast<size_t>(in) * gx.c() + ic]] = gy.at(in, ic, 0, 0);
  return gx;
}

template <typename T>
TensorT<T> ChannelPoolT<T>::forward(const TensorT<T>& x) {
  in_shape_ = x.shape();
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
  const int plane = h * w;
  TensorT<T> y(n, 2, h, w);
  argmax_.assign(static_cast<size_t>(n) * plane, 0);
  for (int in = 0; in < n; ++in) {
    T* mean_p = y.plane(in, 0);
    T* max_p = y.plane(in, 1);
    for (int i = 0; i < plane; ++i) {
      double s = 0.0;
      T best = x.plane(in, 0)[i];
      int best_c = 0;
      for (int ic = 0; ic < c; ++ic) {
        const T v = x.plane(in, ic)[i];
        s += v;
        if (v > best) {
          best = v;
          best_c = ic;
        }
      }
      mean_p[i] = static_cast<T>(s / c);
      max_p[i] = best;
      argmax_[static_cast<size_t>(in) * plane + i] = best_c;
    }
  }
  return y;
}

template <typename T>
TensorT<T> ChannelPoolT<T>::backward(const TensorT<T>& gy) {
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const int plane = h * w;
  TensorT<T> gx(n, c, h, w);
  const T inv_c = T(1) / static_cast<T>(c);
  for (int in = 0; in < n; ++in) {
    const T* g_mean = gy.plane(in, 0);
    const T* g_max = gy.plane(in, 1);
    for (int ic = 0; ic < c; ++ic) {
      T* o = gx.plane(in, ic);
      for (int i = 0; i < plane; ++i) o[i] = g_mean[i] * inv_c;
    }
    for (int i = 0; i < plane; ++i)
      gx.plane(in, argmax_[static_cast<size_t>(in) * plane + i])[i] += g_max[i];
  }
  return gx;
}

// --------------------------------------------------------- pad and blur ----

template <typename T>
TensorT<T> reflect_pad(const TensorT<T>& x, int pt, int pb, int pl, int pr) {
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
  TensorT<T> y(n, c, h + pt + pb, w + pl + pr);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = x.plane(in, ic);
      T* dst = y.plane(in, ic);
      for (int j = 0; j < h + pt + pb; ++j) {
        const int sy = reflect101(j - pt, h);
        for (int i = 0; i < w + pl + pr; ++i)
          dst[static_cast<size_t>(j) * (w + pl + pr) + i] =
              src[static_cast<size_t>(sy) * w + reflect101(i - pl, w)];
      }
    }
  return y;
}

template <typename T>
TensorT<T> reflect_pad_adjoint(const TensorT<T>& g, int pt, int pb, int pl, int pr) {
  const int n = g.n(), c = g.c();
  const int h = g.h() - pt - pb, w = g.w() - pl - pr;
  TensorT<T> y(n, c, h, w);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = g.plane(in, ic);
      T* dst = y.plane(in, ic);
      for (int j = 0; j < g.h(); ++j) {
        const int sy = reflect101(j - pt, h);
        for (int i = 0; i < g.w(); ++i)
          dst[static_cast<size_t>(sy) * w + reflect101(i - pl, w)] +=
              src[static_cast<size_t>(j) * g.w() + i];
      }
    }
  return y;
}

template <typename T>
std::vector<T> gaussian_kernel1d(int size, double sigma) {
  std::vector<T> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - c;
    const double v = std::exp(-d * d / (2.0 * sigma * sigma));
    k[i] = static_cast<T>(v);
    sum += v;
  }
  for (int i = 0; i < size; ++i) k[i] = static_cast<T>(k[i] / sum);
  return k;
}

template <typename T>
TensorT<T> gaussian_blur_reflect(const TensorT<T>& x, const std::vector<T>& k) {
  const int ks = static_cast<int>(k.size());
  const int p = (ks - 1) / 2;
  TensorT<T> xp = reflect_pad(x, p, p, p, p);
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
  const int hp = h + 2 * p, wp = w + 2 * p;

  // Horizontal pass: (hp, wp) -> (hp, w).
  TensorT<T> tmp(n, c, hp, w);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = xp.plane(in, ic);
      T* dst = tmp.plane(in, ic);
      for (int y = 0; y < hp; ++y)
        for (int ox = 0; ox < w; ++ox) {
          double s = 0.0;
          for (int j = 0; j < ks; ++j) s += static_cast<double>(src[y * wp + ox + j]) * k[j];
          dst[y * w + ox] = static_cast<T>(s);
        }
    }
  // Vertical pass: (hp, w) -> (h, w).
  TensorT<T> out(n, c, h, w);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = tmp.plane(in, ic);
      T* dst = out.plane(in, ic);
      for (int oy = 0; oy < h; ++oy)
        for (int x2 = 0; x2 < w; ++x2) {
          double s = 0.0;
          for (int j = 0; j < ks; ++j) s += static_cast<double>(src[(oy + j) * w + x2]) * k[j];
          dst[oy * w + x2] = static_cast<T>(s);
        }
    }
  return out;
}

template <typename T>
TensorT<T> gaussian_blur_reflect_adjoint(const TensorT<T>& g, const std::vector<T>& k) {
  const int ks = static_cast<int>(k.size());
  const int p = (ks - 1) / 2;
  const int n = g.n(), c = g.c(), h = g.h(), w = g.w();
  const int hp = h + 2 * p, wp = w + 2 * p;

  // Adjoint of the vertical pass: scatter (h, w) -> (hp, w).
  TensorT<T> tmp(n, c, hp, w);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = g.plane(in, ic);
      T* dst = tmp.plane(in, ic);
      for (int oy = 0; oy < h; ++oy)
        for (int x2 = 0; x2 < w; ++x2) {
          const T v = src[oy * w + x2];
          for (int j = 0; j < ks; ++j) dst[(oy + j) * w + x2] += v * k[j];
        }
    }
  // Adjoint of the horizontal pass: scatter (hp, w) -> (hp, wp).
  TensorT<T> tmp2(n, c, hp, wp);
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const T* src = tmp.plane(in, ic);
      T* dst = tmp2.plane(in, ic);
      for (int y = 0; y < hp; ++y)
        for (int ox = 0; ox < w; ++ox) {
          const T v = src[y * w + ox];
          for (int j = 0; j < ks; ++j) dst[y * wp + ox + j] += v * k[j];
        }
    }
  return reflect_pad_adjoint(tmp2, p, p, p, p);
}

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw ShapeError("concat: incompatible shapes " + a.shape_str() + " vs " + b.shape_str());
  TensorT<T> y(a.n(), a.c() + b.c(), a.h(), a.w());
  const size_t plane_a = static_cast<size_t>(a.c()) * a.h() * a.w();
  const size_t plane_b = static_cast<size_t>(b.c()) * b.h() * b.w();
  for (int in = 0; in < a.n(); ++in) {
    std::copy(a.plane(in, 0), a.plane(in, 0) + plane_a, y.plane(in, 0));
    std::copy(b.plane(in, 0), b.plane(in, 0) + plane_b, y.plane(in, 0) + plane_a);
  }
  return y;
}

template <typename T>
void split_channels(const TensorT<T>& g, TensorT<T>& ga, TensorT<T>& gb) {
  const size_t plane_a = static_cast<size_t>(ga.c()) * ga.h() * ga.w();
  const size_t plane_b = static_cast<size_t>(gb.c()) * gb.h() * gb.w();
  for (int in = 0; in < g.n(); ++in) {
    std::copy(g.plane(in, 0), g.plane(in, 0) + plane_a, ga.plane(in, 0));
    std::copy(g.plane(in, 0) + plane_a, g.plane(in, 0) + plane_a + plane_b, gb.plane(in, 0));
  }
}

// ------------------------------------------------------- instantiations ----

template void he_normal_init<float>(TensorT<float>&, int, Rng&);
template void he_normal_init<double>(TensorT<double>&, int, Rng&);
template void im2col_range<float>(const float*, int, int, int, int, int, int, int, int, int, int,
                                  int, int, float*);
template void im2col_range<double>(const double*, int, int, int, int, int, int, int, int, int,
                                   int, int, int, double*);
template void col2im_range<float>(const float*, int, int, int, int, int, int, int, int, int, int,
                                  int, int, float*);
template void col2im_range<double>(const double*, int, int, int, int, int, int, int, int, int,
                                   int, int, int, double*);
template TensorT<float> reflect_pad<float>(const TensorT<float>&, int, int, int, int);
template TensorT<double> reflect_pad<double>(const TensorT<double>&, int, int, int, int);
template TensorT<float> reflect_pad_adjoint<float>(const TensorT<float>&, int, int, int, int);
template TensorT<double> reflect_pad_adjoint<double>(const TensorT<double>&, int, int, int, int);
template std::vector<float> gaussian_kernel1d<float>(int, double);
template std::vector<double> gaussian_kernel1d<double>(int, double);
template TensorT<float> gaussian_blur_reflect<float>(const TensorT<float>&,
                                                     const std::vector<float>&);
template TensorT<double> gaussian_blur_reflect<double>(const TensorT<double>&,
                                                       const std::vector<double>&);
template TensorT<float> gaussian_blur_reflect_adjoint<float>(const TensorT<float>&,
                                                             const std::vector<float>&);
template TensorT<double> gaussian_blur_reflect_adjoint<double>(const TensorT<double>&,
                                                               const std::vector<double>&);
template TensorT<float> concat_channels<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> concat_channels<double>(const TensorT<double>&, const TensorT<double>&);
template void split_channels<float>(const TensorT<float>&, TensorT<float>&, TensorT<float>&);
template void split_channels<double>(const TensorT<double>&, TensorT<double>&, TensorT<double>&);

template class Conv2dT<float>;
template class Conv2dT<double>;
template class ConvTranspose2dT<float>;
template class ConvTranspose2dT<double>;
template class BatchNorm2dT<float>;
template class BatchNorm2dT<double>;
template class ReluT<float>;
template class ReluT<double>;
template class SigmoidT<float>;
template class SigmoidT<double>;
template class MaxPool2dT<float>;
template class MaxPool2dT<double>;
template class GlobalAvgPoolT<float>;
template class GlobalAvgPoolT<double>;
template class GlobalMaxPoolT<float>;
template class GlobalMaxPoolT<double>;
template class ChannelPoolT<float>;
template class ChannelPoolT<double>;

}  // namespace gated
