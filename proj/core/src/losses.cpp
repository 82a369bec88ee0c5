#include "gated/losses.hpp"

#include <cmath>

#include "gated/layers.hpp"

namespace gated {

namespace {
constexpr double kC1 = 1e-4;  // (0.01)^2
constexpr double kC2 = 9e-4;  // (0.03)^2
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
}  // namespace

template <typename T>
std::map<std::string, T> LossBreakdownT<T>::flat() const {
  return {
      {"stage1.l1", stage1.l1},       {"stage1.ssim", stage1.ssim},
      {"stage1.tv", stage1.tv},       {"stage1.color", stage1.color},
      {"stage1.gamma_reg", stage1.gamma_reg}, {"stage1.total", stage1.total},
      {"stage2.l1", stage2.l1},       {"stage2.ssim", stage2.ssim},
      {"stage2.tv", stage2.tv},       {"stage2.color", stage2.color},
      {"stage2.total", stage2.total}, {"total", total},
  };
}

// -------------------------------------------------------------------- L1 ---

template <typename T>
T l1_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  check_same_shape(pred, target, "l1_loss");
  double s = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) s += std::abs(static_cast<double>(pred[i]) - target[i]);
  return static_cast<T>(s / static_cast<double>(pred.numel()));
}

template <typename T>
T l1_loss_backward(const TensorT<T>& pred, const TensorT<T>& target, T w, TensorT<T>& gpred) {
  check_same_shape(pred, target, "l1_loss");
  const T scale = w / static_cast<T>(pred.numel());
  double s = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    s += std::abs(d);
    if (d > 0)
      gpred[i] += scale;
    else if (d < 0)
      gpred[i] -= scale;
  }
  return static_cast<T>(s / static_cast<double>(pred.numel()));
}

// ------------------------------------------------------------------ SSIM ---

namespace {

// Windowed SSIM value and optional gradient through the blurred moments
// A = blur(x), C = blur(x*x), E = blur(x*y) (B, D are constants in x).
template <typename T>
T ssim_windowed(const TensorT<T>& x, const TensorT<T>& y, TensorT<T>* gx, T w) {
  const auto kern = gaussian_kernel1d<T>(kSsimWindow, kSsimSigma);
  TensorT<T> xx(x.n(), x.c(), x.h(), x.w()), yy(xx.n(), xx.c(), xx.h(), xx.w()),
      xy(xx.n(), xx.c(), xx.h(), xx.w());
  for (size_t i = 0; i < x.numel(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  TensorT<T> a = gaussian_blur_reflect(x, kern);
  TensorT<T> b = gaussian_blur_reflect(y, kern);
  TensorT<T> c = gaussian_blur_reflect(xx, kern);
  TensorT<T> d = gaussian_blur_reflect(yy, kern);
  TensorT<T> e = gaussian_blur_reflect(xy, kern);

  const size_t n = x.numel();
  double sum = 0.0;
  TensorT<T> ga, gc, ge;
  if (gx) {
    ga = TensorT<T>(x.n(), x.c(), x.h(), x.w());
    gc = TensorT<T>(x.n(), x.c(), x.h(), x.w());
    ge = TensorT<T>(x.n(), x.c(), x.h(), x.w());
  }
  const T wpix = gx ? w / static_cast<T>(n) : T(0);
  for (size_t i = 0; i < n; ++i) {
    const double A = a[i], B = b[i], C = c[i], D = d[i], E = e[i];
    const double n1 = 2.0 * A * B + kC1;
    const double d1 = A * A + B * B + kC1;
    const double n2 = 2.0 * (E - A * B) + kC2;
    const double d2 = (C - A * A) + (D - B * B) + kC2;
    const double s = (n1 * n2) / (d1 * d2);
    sum += s;
    if (gx) {
      ga[i] = wpix * static_cast<T>(2.0 * B * (n2 - n1) / (d1 * d2) -
                                    2.0 * A * s * (1.0 / d1 - 1.0 / d2));
      gc[i] = wpix * static_cast<T>(-s / d2);
      ge[i] = wpix * static_cast<T>(2.0 * n1 / (d1 * d2));
    }
  }
  if (gx) {
    TensorT<T> ta = gaussian_blur_reflect_adjoint(ga, kern);
    TensorT<T> tc = gaussian_blur_reflect_adjoint(gc, kern);
    TensorT<T> te = gaussian_blur_reflect_adjoint(ge, kern);
    for (size_t i = 0; i < n; ++i)
      (*gx)[i] += ta[i] + T(2) * x[i] * tc[i] + y[i] * te[i];
  }
  return static_cast<T>(sum / static_cast<double>(n));
}

// Global-statistics SSIM: one set of moments per (n, c) plane.
template <typename T>
T ssim_global(const TensorT<T>& x, const TensorT<T>& y, TensorT<T>* gx, T w) {
  const int planes = x.n() * x.c();
  const int hw = x.h() * x.w();
  double sum = 0.0;
  for (int p = 0; p < planes; ++p) {
    const T* xp = x.data() + static_cast<size_t>(p) * hw;
    const T* yp = y.data() + static_cast<size_t>(p) * hw;
    double A = 0, B = 0, C = 0, D = 0, E = 0;
    for (int i = 0; i < hw; ++i) {
      A += xp[i];
      B += yp[i];
      C += static_cast<double>(xp[i]) * xp[i];
      D += static_cast<double>(yp[i]) * yp[i];
      E += static_cast<double>(xp[i]) * yp[i];
    }
    A /= hw;
    B /= hw;
    C /= hw;
    D /= hw;
    E /= hw;
    const double n1 = 2.0 * A * B + kC1;
    const double d1 = A * A + B * B + kC1;
    const double n2 = 2.0 * (E - A * B) + kC2;
    const double d2 = (C - A * A) + (D - B * B) + kC2;
    const double s = (n1 * n2) / (d1 * d2);
    sum += s;
    if (gx) {
      const double ga = 2.0 * B * (n2 - n1) / (d1 * d2) - 2.0 * A * s * (1.0 / d1 - 1.0 / d2);
      const double gc = -s / d2;
      const double ge = 2.0 * n1 / (d1 * d2);
      const double scale = static_cast<double>(w) / (static_cast<double>(planes) * hw);
      T* gp = gx->data() + static_cast<size_t>(p) * hw;
      for (int i = 0; i < hw; ++i)
        gp[i] += static_cast<T>(scale * (ga + 2.0 * xp[i] * gc + yp[i] * ge));
    }
  }
  return static_cast<T>(sum / planes);
}

}  // namespace

template <typename T>
T ssim(const TensorT<T>& x, const TensorT<T>& y, SsimMode mode) {
  check_same_shape(x, y, "ssim");
  return mode == SsimMode::windowed ? ssim_windowed<T>(x, y, nullptr, T(0))
                                    : ssim_global<T>(x, y, nullptr, T(0));
}

template <typename T>
T ssim_backward(const TensorT<T>& x, const TensorT<T>& y, SsimMode mode, T w, TensorT<T>& gx) {
  check_same_shape(x, y, "ssim");
  return mode == SsimMode::windowed ? ssim_windowed<T>(x, y, &gx, w)
                                    : ssim_global<T>(x, y, &gx, w);
}

template <typename T>
T ssim_loss(const TensorT<T>& pred, const TensorT<T>& target, SsimMode mode) {
  return T(1) - ssim(pred, target, mode);
}

// -------------------------------------------------------------------- TV ---

template <typename T>
T tv_loss(const TensorT<T>& img, T lambda_tv) {
  const int n = img.n(), c = img.c(), h = img.h(), w = img.w();
  const double norm = static_cast<double>(c) * h * w;
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    double s = 0.0;
    for (int ic = 0; ic < c; ++ic) {
      const T* p = img.plane(in, ic);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (x + 1 < w) {
            const double d = static_cast<double>(p[y * w + x + 1]) - p[y * w + x];
            s += d * d;
          }
          if (y + 1 < h) {
            const double d = static_cast<double>(p[(y + 1) * w + x]) - p[y * w + x];
            s += d * d;
          }
        }
    }
    batch += s / norm;
  }
  return static_cast<T>(lambda_tv * batch / n);
}

template <typename T>
T tv_loss_backward(const TensorT<T>& img, T lambda_tv, T w, TensorT<T>& g) {
  const int n = img.n(), c = img.c(), h = img.h(), wd = img.w();
  const double norm = static_cast<double>(c) * h * wd;
  const T scale = w * lambda_tv / static_cast<T>(norm * n);
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    double s = 0.0;
    for (int ic = 0; ic < c; ++ic) {
      const T* p = img.plane(in, ic);
      T* gp = g.plane(in, ic);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
          if (x + 1 < wd) {
            const T d = p[y * wd + x + 1] - p[y * wd + x];
            s += static_cast<double>(d) * d;
            gp[y * wd + x + 1] += scale * 2 * d;
            gp[y * wd + x] -= scale * 2 * d;
          }
          if (y + 1 < h) {
            const T d = p[(y + 1) * wd + x] - p[y * wd + x];
            s += static_cast<double>(d) * d;
            gp[(y + 1) * wd + x] += scale * 2 * d;
            gp[y * wd + x] -= scale * 2 * d;
          }
        }
    }
    batch += s / norm;
  }
  return static_cast<T>(lambda_tv * batch / n);
}

// ----------------------------------------------------------------- color ---

template <typename T>
T color_constancy_loss(const TensorT<T>& img, T lambda_c) {
  if (img.c() != 3) throw ShapeError("color loss expects 3 channels, got " + img.shape_str());
  const int n = img.n(), hw = img.h() * img.w();
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    double mu[3] = {0, 0, 0};
    for (int ic = 0; ic < 3; ++ic) {
      const T* p = img.plane(in, ic);
      double s = 0.0;
      for (int i = 0; i < hw; ++i) s += p[i];
      mu[ic] = s / hw;
    }
    const double rg = mu[0] - mu[1], rb = mu[0] - mu[2], gb = mu[1] - mu[2];
    batch += rg * rg + rb * rb + gb * gb;
  }
  return static_cast<T>(lambda_c * batch / n);
}

template <typename T>
T color_constancy_loss_backward(const TensorT<T>& img, T lambda_c, T w, TensorT<T>& g) {
  if (img.c() != 3) throw ShapeError("color loss expects 3 channels, got " + img.shape_str());
  const int n = img.n(), hw = img.h() * img.w();
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    double mu[3] = {0, 0, 0};
    for (int ic = 0; ic < 3; ++ic) {
      const T* p = img.plane(in, ic);
      double s = 0.0;
      for (int i = 0; i < hw; ++i) s += p[i];
      mu[ic] = s / hw;
    }
    const double rg = mu[0] - mu[1], rb = mu[0] - mu[2], gb = mu[1] - mu[2];
    batch += rg * rg + rb * rb + gb * gb;
    const double dmu[3] = {2 * (rg + rb), 2 * (-rg + gb), 2 * (-rb - gb)};
    for (int ic = 0; ic < 3; ++ic) {
      const T add = static_cast<T>(static_cast<double>(w) * lambda_c * dmu[ic] / (hw * n));
      T* gp = g.plane(in, ic);
      for (int i = 0; i < hw; ++i) gp[i] += add;
    }
  }
  return static_cast<T>(lambda_c * batch / n);
}

// ------------------------------------------------------- gamma regularizer -

template <typename T>
T gamma_reg_loss(const TensorT<T>& gamma, T lambda_gamma, T target) {
  const int n = gamma.n();
  const size_t per = gamma.numel() / n;
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    const T* p = gamma.data() + static_cast<size_t>(in) * per;
    double s = 0.0;
    for (size_t i = 0; i < per; ++i) s += p[i];
    const double d = s / static_cast<double>(per) - target;
    batch += d * d;
  }
  return static_cast<T>(lambda_gamma * batch / n);
}

template <typename T>
T gamma_reg_loss_backward(const TensorT<T>& gamma, T lambda_gamma, T target, T w, TensorT<T>& g) {
  const int n = gamma.n();
  const size_t per = gamma.numel() / n;
  double batch = 0.0;
  for (int in = 0; in < n; ++in) {
    const T* p = gamma.data() + static_cast<size_t>(in) * per;
    double s = 0.0;
    for (size_t i = 0; i < per; ++i) s += p[i];
    const double d = s / static_cast<double>(per) - target;
    batch += d * d;
    const T add = static_cast<T>(static_cast<double>(w) * lambda_gamma * 2.0 * d /
                                 (static_cast<double>(per) * n));
    T* gp = g.data() + static_cast<size_t>(in) * per;
    for (size_t i = 0; i < per; ++i) gp[i] += add;
  }
  return static_cast<T>(lambda_gamma * batch / n);
}

// ------------------------------------------------------- stage and total ---

template <typename T>
StageTermsT<T> stage_loss(const TensorT<T>& pred, const TensorT<T>& target,
                          const TensorT<T>* gamma, const LossWeightsT<T>& w) {
  StageTermsT<T> t;
  t.l1 = l1_loss(pred, target);
  t.ssim = T(1) - ssim(pred, target, w.ssim_mode);
  t.tv = tv_loss(pred, w.lambda_tv);
  t.color = color_constancy_loss(pred, w.lambda_c);
  if (gamma) t.gamma_reg = gamma_reg_loss(*gamma, w.lambda_gamma, w.gamma_target);
  t.total = w.alpha * t.l1 + w.beta * t.ssim + w.gamma_w * t.tv + w.delta * t.color + t.gamma_reg;
  return t;
}

template <typename T>
StageTermsT<T> stage_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                                   const TensorT<T>* gamma, const LossWeightsT<T>& w, T outer,
                                   TensorT<T>& gpred, TensorT<T>* ggamma) {
  StageTermsT<T> t;
  t.l1 = l1_loss_backward(pred, target, outer * w.alpha, gpred);
  // d(1 - ssim)/dx = -dssim/dx
  t.ssim = T(1) - ssim_backward(pred, target, w.ssim_mode, -outer * w.beta, gpred);
  t.tv = tv_loss_backward(pred, w.lambda_tv, outer * w.gamma_w, gpred);
  t.color = color_constancy_loss_backward(pred, w.lambda_c, outer * w.delta, gpred);
  if (gamma && ggamma)
    t.gamma_reg = gamma_reg_loss_backward(*gamma, w.lambda_gamma, w.gamma_target, outer, *ggamma);
  else if (gamma)
    t.gamma_reg = gamma_reg_loss(*gamma, w.lambda_gamma, w.gamma_target);
  t.total = w.alpha * t.l1 + w.beta * t.ssim + w.gamma_w * t.tv + w.delta * t.color + t.gamma_reg;
  return t;
}

template <typename T>
LossBreakdownT<T> total_loss(const TensorT<T>& stage1_img, const TensorT<T>& final_img,
                             const TensorT<T>& target, const TensorT<T>& gamma,
                             const LossWeightsT<T>& w) {
  LossBreakdownT<T> b;
  b.stage1 = stage_loss(stage1_img, target, &gamma, w);
  b.stage2 = stage_loss(final_img, target, static_cast<const TensorT<T>*>(nullptr), w);
  b.total = w.stage1_weight * b.stage1.total + w.stage2_weight * b.stage2.total;
  return b;
}

template <typename T>
LossBreakdownT<T> total_loss_backward(const TensorT<T>& stage1_img, const TensorT<T>& final_img,
                                      const TensorT<T>& target, const TensorT<T>& gamma,
                                      const LossWeightsT<T>& w, TensorT<T>& g_stage1,
                                      TensorT<T>& g_final, TensorT<T>& g_gamma) {
  g_stage1 = TensorT<T>(stage1_img.n(), stage1_img.c(), stage1_img.h(), stage1_img.w());
  g_final = TensorT<T>(final_img.n(), final_img.c(), final_img.h(), final_img.w());
  g_gamma = TensorT<T>(gamma.n(), gamma.c(), gamma.h(), gamma.w());
  LossBreakdownT<T> b;
  b.stage1 = stage_loss_backward(stage1_img, target, &gamma, w, w.stage1_weight, g_stage1,
                                 &g_gamma);
  b.stage2 = stage_loss_backward(final_img, target, static_cast<const TensorT<T>*>(nullptr), w,
                                 w.stage2_weight, g_final, static_cast<TensorT<T>*>(nullptr));
  b.total = w.stage1_weight * b.stage1.total + w.stage2_weight * b.stage2.total;
  return b;
}

// ------------------------------------------------------- instantiations ----

#define GATED_INSTANTIATE_LOSSES(T)                                                              \
  template struct LossBreakdownT<T>;                                                             \
  template T l1_loss<T>(const TensorT<T>&, const TensorT<T>&);                                   \
  template T l1_loss_backward<T>(const TensorT<T>&, const TensorT<T>&, T, TensorT<T>&);          \
  template T ssim<T>(const TensorT<T>&, const TensorT<T>&, SsimMode);                            \
  template T ssim_backward<T>(const TensorT<T>&, const TensorT<T>&, SsimMode, T, TensorT<T>&);   \
  template T ssim_loss<T>(const TensorT<T>&, const TensorT<T>&, SsimMode);                       \
  template T tv_loss<T>(const TensorT<T>&, T);                                                   \
  template T tv_loss_backward<T>(const TensorT<T>&, T, T, TensorT<T>&);                          \
  template T color_constancy_loss<T>(const TensorT<T>&, T);                                      \
  template T color_constancy_loss_backward<T>(const TensorT<T>&, T, T, TensorT<T>&);             \
  template T gamma_reg_loss<T>(const TensorT<T>&, T, T);                                         \
  template T gamma_reg_loss_backward<T>(const TensorT<T>&, T, T, T, TensorT<T>&);                \
  template StageTermsT<T> stage_loss<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>*, \
                                        const LossWeightsT<T>&);                                 \
  template StageTermsT<T> stage_loss_backward<T>(const TensorT<T>&, const TensorT<T>&,           \
                                                 const TensorT<T>*, const LossWeightsT<T>&, T,   \
                                                 TensorT<T>&, TensorT<T>*);                      \
  template LossBreakdownT<T> total_loss<T>(const TensorT<T>&, const TensorT<T>&,                 \
                                           const TensorT<T>&, const TensorT<T>&,                 \
                                           const LossWeightsT<T>&);                              \
  template LossBreakdownT<T> total_loss_backward<T>(                                             \
      const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,               \
      const LossWeightsT<T>&, TensorT<T>&, TensorT<T>&, TensorT<T>&);

GATED_INSTANTIATE_LOSSES(float)
GATED_INSTANTIATE_LOSSES(double)

}  // namespace gated
