#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gated/agcm.hpp"
#include "gated/errors.hpp"
#include "testutil.hpp"

using gated::Tensor;
using gated::TensorD;
using testutil::dot;
using testutil::grad_check;
using testutil::random_tensor;

TEST_CASE("power law closed-form values") {
  TensorD v(1, 1, 1, 3);
  v[0] = 0.25;
  v[1] = 0.1;
  v[2] = 0.9;
  TensorD g(1, 1, 1, 3, 0.5);
  TensorD y = gated::apply_gamma(v, g);
  CHECK(std::abs(y[0] - std::sqrt(0.25 + 1e-6)) < 1e-12);
  CHECK(std::abs(y[1] - std::sqrt(0.1 + 1e-6)) < 1e-12);
  CHECK(std::abs(y[1] - 0.3162293) < 1e-6);
  CHECK(std::abs(y[2] - std::sqrt(0.9 + 1e-6)) < 1e-12);
}

TEST_CASE("exponent one is the identity up to the epsilon shift") {
  Tensor v = testutil::random_tensor<float>(1, 3, 8, 8, 90, 0.0f, 0.99f);
  Tensor g(1, 3, 8, 8, 1.0f);
  Tensor y = gated::apply_gamma(v, g);
  for (size_t i = 0; i < v.numel(); ++i) CHECK(std::abs(y[i] - (v[i] + 1e-6f)) <= 1e-7f);
}

TEST_CASE("exponents below one brighten") {
  Tensor v = testutil::random_tensor<float>(1, 3, 8, 8, 91, 0.01f, 0.99f);
  Tensor g(1, 3, 8, 8, 0.6f);
  Tensor y = gated::apply_gamma(v, g);
  for (size_t i = 0; i < v.numel(); ++i) CHECK(y[i] > v[i]);
}

TEST_CASE("output is monotone in the input") {
  const int n = 1000;
  TensorD v(1, 1, 1, n);
  for (int i = 0; i < n; ++i) v[i] = double(i) / double(n - 1);
  TensorD g(1, 1, 1, n, 0.8);
  TensorD y = gated::apply_gamma(v, g);
  for (int i = 1; i < n; ++i) CHECK(y[i] >= y[i - 1] - 1e-9);
}

TEST_CASE("output clamps to [0,1]") {
  TensorD v(1, 1, 1, 2);
  v[0] = 0.999999;
  v[1] = 0.0;
  TensorD g(1, 1, 1, 2);
  g[0] = 0.5;
  g[1] = 0.5;
  TensorD y = gated::apply_gamma(v, g);
  CHECK(y[0] <= 1.0);
  CHECK(y[1] >= 0.0);
}

TEST_CASE("power law gradients pass finite differences over 5 seeds") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    TensorD v = random_tensor<double>(1, 3, 8, 8, 100 + seed, 0.02, 0.95);
    TensorD g = random_tensor<double>(1, 3, 8, 8, 110 + seed, 0.55, 1.95);
    TensorD r = random_tensor<double>(1, 3, 8, 8, 120 + seed, -1.0, 1.0);
    gated::GammaApplyT<double> op;
    auto loss = [&] { return dot(op.forward(v, g), r); };
    loss();
    TensorD gv(1, 3, 8, 8), gg(1, 3, 8, 8);
    op.backward(r, gv, gg);
    CHECK(grad_check(loss, v, gv) < 1e-4);
    CHECK(grad_check(loss, g, gg) < 1e-4);
  }
}

TEST_CASE("stage-1 exponents always live in [0.5, 2.0]") {
  gated::Rng rng(7);
  gated::Agcm agcm(rng);
  agcm.set_train(false);
  Tensor x = testutil::random_tensor<float>(2, 3, 8, 8, 130);
  gated::AgcmOut out = agcm.forward(x);
  REQUIRE(out.gamma.same_shape(x));
  for (size_t i = 0; i < out.gamma.numel(); ++i) {
    CHECK(out.gamma[i] >= 0.5f);
    CHECK(out.gamma[i] <= 2.0f);
  }
  for (size_t i = 0; i < out.image.numel(); ++i) {
    CHECK(out.image[i] >= 0.0f);
    CHECK(out.image[i] <= 1.0f);
  }
}

TEST_CASE("zeroed head emits the midpoint exponent 1.25") {
  gated::Rng rng(8);
  gated::Agcm agcm(rng);
  agcm.set_train(false);
  gated::ParamList ps;
  agcm.collect_state("agcm", ps);
  for (auto& p : ps)
    if (p.name == "agcm.head.weight" || p.name == "agcm.head.bias") p.value->zero();
  Tensor x = testutil::random_tensor<float>(1, 3, 6, 6, 131);
  gated::AgcmOut out = agcm.forward(x);
  for (size_t i = 0; i < out.gamma.numel(); ++i)
    CHECK(std::abs(out.gamma[i] - 1.25f) < 1e-6f);
}

TEST_CASE("rejects non-3-channel input") {
  gated::Rng rng(9);
  gated::Agcm agcm(rng);
  CHECK_THROWS_AS(agcm.forward(Tensor(1, 1, 8, 8, 0.5f)), gated::ShapeError);
}

TEST_CASE("full stage-1 gradients pass finite differences") {
  gated::Rng rng(10);
  gated::AgcmT<double> agcm(rng);
  TensorD x = random_tensor<double>(1, 3, 6, 6, 132, 0.05, 0.9);
  TensorD r_img = random_tensor<double>(1, 3, 6, 6, 133, -1.0, 1.0);
  TensorD r_gamma = random_tensor<double>(1, 3, 6, 6, 134, -1.0, 1.0);

  auto loss = [&] {
    auto out = agcm.forward(x);
    return dot(out.image, r_img) + dot(out.gamma, r_gamma);
  };
  loss();
  agcm.zero_grad();
  TensorD gx = agcm.backward(r_img, r_gamma);
  CHECK(grad_check(loss, x, gx, 1e-6) < 1e-4);

  gated::ParamListT<double> ps;
  agcm.collect_state("agcm", ps);
  int checked = 0;
  for (auto& p : ps) {
    if (!p.trainable) continue;
    // spot-check the head and one tensor per block to keep runtime sane
    if (p.name == "agcm.head.weight" || p.name == "agcm.head.bias" ||
        p.name == "agcm.gcb.fc1.weight" || p.name == "agcm.feb.conv1.bias" ||
        p.name == "agcm.feb.bn2.weight") {
      CHECK(grad_check(loss, *p.value, *p.grad, 1e-6) < 1e-4);
      ++checked;
    }
  }
  CHECK(checked == 5);
}

TEST_CASE("state names cover feb, gcb, and head") {
  gated::Rng rng(11);
  gated::Agcm agcm(rng);
  gated::ParamList ps;
  agcm.collect_state("agcm", ps);
  std::vector<std::string> names;
  for (auto& p : ps) names.push_back(p.name);
  for (const char* want :
       {"agcm.feb.conv1.weight", "agcm.feb.bn1.running_mean", "agcm.feb.conv3.bias",
        "agcm.gcb.fc1.weight", "agcm.gcb.fc2.bias", "agcm.head.weight", "agcm.head.bias"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  size_t trainable = 0;
  for (auto& p : ps)
    if (p.trainable) trainable += p.value->numel();
  CHECK(trainable == 20755);
}
