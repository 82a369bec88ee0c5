#include <benchmark/benchmark.h>

#include "gated/agcm.hpp"
#include "gated/cbam.hpp"
#include "gated/layers.hpp"
#include "gated/losses.hpp"
#include "gated/rng.hpp"
#include "gated/unet.hpp"

namespace {

gated::Tensor random_image(int n, int c, int h, int w, uint64_t seed) {
  gated::Rng rng(seed);
  gated::Tensor t(n, c, h, w);
  for (auto& v : t.vec()) v = static_cast<float>(rng.uniform());
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  gated::Rng rng(1);
  gated::Conv2d conv(c, c, 3, 1, 1, true, rng);
  gated::Tensor x = random_image(1, c, 64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(64)->Arg(128);

void BM_ConvBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  gated::Rng rng(1);
  gated::Conv2d conv(c, c, 3, 1, 1, true, rng);
  gated::Tensor x = random_image(1, c, 64, 64, 2);
  gated::Tensor gy = conv.forward(x);
  for (auto _ : state) {
    conv.zero_grad();
    benchmark::DoNotOptimize(conv.backward(gy));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ConvBackward)->Arg(32)->Arg(64);

void BM_CbamForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  gated::Rng rng(1);
  gated::Cbam cbam(c, rng);
  gated::Tensor x = random_image(1, c, 32, 32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cbam.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CbamForward)->Arg(64)->Arg(256);

void BM_SsimLoss(benchmark::State& state) {
  gated::Tensor x = random_image(1, 3, 128, 128, 2);
  gated::Tensor y = random_image(1, 3, 128, 128, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gated::ssim_loss(x, y));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SsimLoss);

void BM_AgcmForward(benchmark::State& state) {
  gated::Rng rng(1);
  gated::Agcm agcm(rng);
  agcm.set_train(false);
  gated::Tensor x = random_image(1, 3, 128, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(agcm.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AgcmForward);

void BM_ModelForward64(benchmark::State& state) {
  gated::GatedModel model(7);
  model.set_train(false);
  gated::Tensor x = random_image(1, 3, 64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ModelForward64);

}  // namespace

BENCHMARK_MAIN();
