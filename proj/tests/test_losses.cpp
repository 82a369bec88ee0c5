#include <doctest.h>

#include <cmath>

#include "gated/losses.hpp"
#include "testutil.hpp"

using gated::LossWeightsT;
using gated::SsimMode;
using gated::TensorD;
using testutil::dot;
using testutil::grad_check;
using testutil::random_tensor;

// Frozen reference values from tests/oracle/gen_oracle.py (independent NumPy
// implementation, windowed SSIM cross-checked against scikit-image) on the
// deterministic pair built by make_oracle_pair.
namespace oracle {
constexpr double l1 = 0.204749768190;
constexpr double ssim_windowed = 0.066594018200;
constexpr double ssim_global = 0.031866002131;
constexpr double tv = 0.085063421461;
constexpr double color = 0.000037114686;
}  // namespace oracle

TEST_CASE("frozen oracle values reproduce") {
  TensorD x, y;
  testutil::make_oracle_pair(x, y);
  CHECK(std::abs(gated::l1_loss(x, y) - oracle::l1) < 1e-10);
  CHECK(std::abs(gated::ssim(x, y, SsimMode::windowed) - oracle::ssim_windowed) < 1e-9);
  CHECK(std::abs(gated::ssim(x, y, SsimMode::global) - oracle::ssim_global) < 1e-9);
  CHECK(std::abs(gated::tv_loss(x, 1.0) - oracle::tv) < 1e-10);
  CHECK(std::abs(gated::color_constancy_loss(x, 0.5) - oracle::color) < 1e-12);
}

TEST_CASE("identical images give zero distance") {
  TensorD x = random_tensor<double>(1, 3, 12, 12, 150, 0.0, 1.0);
  CHECK(gated::l1_loss(x, x) == 0.0);
  CHECK(gated::ssim_loss(x, x) <= 1e-6);
  CHECK(std::abs(gated::ssim(x, x) - 1.0) <= 1e-6);
}

TEST_CASE("constant-image structural similarity closed form") {
  TensorD a(1, 3, 16, 16, 0.2), b(1, 3, 16, 16, 0.8);
  const double s = gated::ssim(a, b);
  CHECK(std::abs(s - 0.47074) <= 1e-4);          // quoted band
  CHECK(std::abs(s - 0.470666078518) <= 1e-9);   // exact closed form
  CHECK(std::abs(gated::ssim_loss(a, b) - (1.0 - 0.470666078518)) <= 1e-9);
}

TEST_CASE("smoothness and color penalties vanish where they should") {
  TensorD c(2, 3, 8, 8, 0.37);
  CHECK(gated::tv_loss(c, 1.0) == 0.0);

  TensorD achroma(1, 3, 8, 8);
  for (int ch = 0; ch < 3; ++ch)
    for (int i = 0; i < 64; ++i) achroma.plane(0, ch)[i] = 0.1 + 0.01 * i;
  CHECK(gated::color_constancy_loss(achroma, 0.5) <= 1e-15);

  TensorD ones(1, 3, 4, 4, 1.0);
  CHECK(gated::gamma_reg_loss(ones, 0.1, 1.0) == 0.0);
}

TEST_CASE("hand-sized closed forms") {
  // two-pixel image: one squared step of 1 over C*H*W=2 elements
  TensorD two(1, 1, 1, 2);
  two[0] = 0.0;
  two[1] = 1.0;
  CHECK(std::abs(gated::tv_loss(two, 1.0) - 0.5) < 1e-12);

  // constant channels 0.1/0.2/0.3 with lambda 0.5
  TensorD rgb(1, 3, 2, 2);
  for (int i = 0; i < 4; ++i) {
    rgb.plane(0, 0)[i] = 0.1;
    rgb.plane(0, 1)[i] = 0.2;
    rgb.plane(0, 2)[i] = 0.3;
  }
  CHECK(std::abs(gated::color_constancy_loss(rgb, 0.5) - 0.03) < 1e-12);

  // constant exponent 2.0 against target 1 with lambda 0.1
  TensorD g2(1, 3, 2, 2, 2.0);
  CHECK(std::abs(gated::gamma_reg_loss(g2, 0.1, 1.0) - 0.1) < 1e-12);

  // constant absolute difference
  TensorD p(1, 3, 2, 2, 0.5), t(1, 3, 2, 2, 0.2);
  CHECK(std::abs(gated::l1_loss(p, t) - 0.3) < 1e-12);
}

TEST_CASE("batch reduction is the mean of per-sample losses") {
  TensorD a1 = random_tensor<double>(1, 3, 6, 6, 151), b1 = random_tensor<double>(1, 3, 6, 6, 152);
  TensorD a2 = random_tensor<double>(1, 3, 6, 6, 153), b2 = random_tensor<double>(1, 3, 6, 6, 154);
  TensorD a(2, 3, 6, 6), b(2, 3, 6, 6);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 36; ++i) {
      a.plane(0, c)[i] = a1.plane(0, c)[i];
      a.plane(1, c)[i] = a2.plane(0, c)[i];
      b.plane(0, c)[i] = b1.plane(0, c)[i];
      b.plane(1, c)[i] = b2.plane(0, c)[i];
    }
  const double want_l1 = 0.5 * (gated::l1_loss(a1, b1) + gated::l1_loss(a2, b2));
  CHECK(std::abs(gated::l1_loss(a, b) - want_l1) < 1e-12);
  const double want_ssim = 0.5 * (gated::ssim(a1, b1) + gated::ssim(a2, b2));
  CHECK(std::abs(gated::ssim(a, b) - want_ssim) < 1e-12);
  const double want_tv = 0.5 * (gated::tv_loss(a1, 1.0) + gated::tv_loss(a2, 1.0));
  CHECK(std::abs(gated::tv_loss(a, 1.0) - want_tv) < 1e-12);
  const double want_cc =
      0.5 * (gated::color_constancy_loss(a1, 0.5) + gated::color_constancy_loss(a2, 0.5));
  CHECK(std::abs(gated::color_constancy_loss(a, 0.5) - want_cc) < 1e-12);
}

TEST_CASE("loss gradients pass finite differences over 5 seeds") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    TensorD x = random_tensor<double>(1, 3, 8, 8, 160 + seed, 0.05, 0.95);
    TensorD y = random_tensor<double>(1, 3, 8, 8, 170 + seed, 0.05, 0.95);

    {
      TensorD g(1, 3, 8, 8);
      gated::l1_loss_backward(x, y, 1.0, g);
      auto loss = [&] { return gated::l1_loss(x, y); };
      CHECK(grad_check(loss, x, g) < 1e-4);
    }
    {
      TensorD g(1, 3, 8, 8);
      gated::ssim_backward(x, y, SsimMode::windowed, 1.0, g);
      auto loss = [&] { return gated::ssim(x, y, SsimMode::windowed); };
      CHECK(grad_check(loss, x, g) < 1e-4);
    }
    {
      TensorD g(1, 3, 8, 8);
      gated::ssim_backward(x, y, SsimMode::global, 1.0, g);
      auto loss = [&] { return gated::ssim(x, y, SsimMode::global); };
      CHECK(grad_check(loss, x, g) < 1e-4);
    }
    {
      TensorD g(1, 3, 8, 8);
      gated::tv_loss_backward(x, 1.0, 1.0, g);
      auto loss = [&] { return gated::tv_loss(x, 1.0); };
      CHECK(grad_check(loss, x, g) < 1e-4);
    }
    {
      TensorD g(1, 3, 8, 8);
      gated::color_constancy_loss_backward(x, 0.5, 1.0, g);
      auto loss = [&] { return gated::color_constancy_loss(x, 0.5); };
      CHECK(grad_check(loss, x, g) < 1e-4);
    }
    {
      TensorD gam = random_tensor<double>(1, 3, 8, 8, 180 + seed, 0.6, 1.9);
      TensorD g(1, 3, 8, 8);
      gated::gamma_reg_loss_backward(gam, 0.1, 1.0, 1.0, g);
      auto loss = [&] { return gated::gamma_reg_loss(gam, 0.1, 1.0); };
      CHECK(grad_check(loss, gam, g) < 1e-4);
    }
  }
}

TEST_CASE("stage loss combines terms with its weights") {
  TensorD pred, target;
  testutil::make_oracle_pair(pred, target);
  TensorD gamma = random_tensor<double>(1, 3, 16, 16, 190, 0.6, 1.9);
  LossWeightsT<double> w;

  auto s1 = gated::stage_loss(pred, target, &gamma, w);
  const double want = w.alpha * s1.l1 + w.beta * s1.ssim + w.gamma_w * s1.tv +
                      w.delta * s1.color + s1.gamma_reg;
  CHECK(std::abs(s1.total - want) < 1e-12);
  CHECK(std::abs(s1.l1 - oracle::l1) < 1e-10);
  CHECK(std::abs(s1.ssim - (1.0 - oracle::ssim_windowed)) < 1e-9);
  CHECK(std::abs(s1.tv - oracle::tv) < 1e-10);

  auto s2 = gated::stage_loss(pred, target, static_cast<const TensorD*>(nullptr), w);
  CHECK(s2.gamma_reg == 0.0);
  CHECK(std::abs(s1.total - s2.total - s1.gamma_reg) < 1e-12);  // stage2 = stage1 - reg
}

TEST_CASE("composite loss blends stages 0.3/0.7 and its gradient checks out") {
  TensorD s1 = random_tensor<double>(1, 3, 8, 8, 191, 0.05, 0.95);
  TensorD fin = random_tensor<double>(1, 3, 8, 8, 192, 0.05, 0.95);
  TensorD tgt = random_tensor<double>(1, 3, 8, 8, 193, 0.05, 0.95);
  TensorD gam = random_tensor<double>(1, 3, 8, 8, 194, 0.6, 1.9);
  LossWeightsT<double> w;

  auto b = gated::total_loss(s1, fin, tgt, gam, w);
  auto t1 = gated::stage_loss(s1, tgt, &gam, w);
  auto t2 = gated::stage_loss(fin, tgt, static_cast<const TensorD*>(nullptr), w);
  CHECK(std::abs(b.total - (0.3 * t1.total + 0.7 * t2.total)) < 1e-6);
  CHECK(std::abs(b.stage1.total - t1.total) < 1e-12);
  CHECK(std::abs(b.stage2.total - t2.total) < 1e-12);

  TensorD gs1, gfin, ggam;
  auto b2 = gated::total_loss_backward(s1, fin, tgt, gam, w, gs1, gfin, ggam);
  CHECK(std::abs(b2.total - b.total) < 1e-12);
  auto loss_s1 = [&] { return gated::total_loss(s1, fin, tgt, gam, w).total; };
  CHECK(grad_check(loss_s1, s1, gs1) < 1e-4);
  CHECK(grad_check(loss_s1, fin, gfin) < 1e-4);
  CHECK(grad_check(loss_s1, gam, ggam) < 1e-4);

  auto flat = b.flat();
  CHECK(flat.count("stage1.l1") == 1);
  CHECK(flat.count("stage2.ssim") == 1);
  CHECK(flat.count("total") == 1);
  CHECK(flat["total"] == b.total);
}

TEST_CASE("windowed and global statistics modes differ on structured images") {
  TensorD x, y;
  testutil::make_oracle_pair(x, y);
  CHECK(std::abs(gated::ssim(x, y, SsimMode::windowed) -
                 gated::ssim(x, y, SsimMode::global)) > 1e-3);
}
