#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gated/checkpoint.hpp"
#include "gated/config.hpp"
#include "gated/dataset.hpp"
#include "gated/layers.hpp"
#include "gated/losses.hpp"
#include "gated/metrics.hpp"
#include "gated/unet.hpp"

namespace gated {

// Adaptive moment estimation with bias correction. Non-trainable entries
// (running stats) are skipped.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Clips to clip_norm when > 0, then applies one update. Returns the
  // pre-clip global gradient norm.
  double step(const ParamList& params, double lr, double clip_norm = 0);

  int64_t t() const { return t_; }

  // Moments as ".m"/".v"-suffixed named tensors, for checkpoints.
  NamedTensors export_state(const ParamList& params) const;
  void import_state(const ParamList& params, const NamedTensors& state, int64_t t);

 private:
  void ensure(const ParamList& params);
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;  // parallel to the param list
};

// Base at epoch 0 decaying to min_lr at the final epoch.
double cosine_lr(double base, double min_lr, int epoch, int total_epochs);

// Inference wrapper: reflect-pads to a multiple of 16, runs the model in
// eval mode, crops back to the input size.
class ModelEnhancer final : public Enhancer {
 public:
  explicit ModelEnhancer(GatedModel& model) : model_(model) {}
  Tensor enhance(const Tensor& low) override;
  GatedOut enhance_all(const Tensor& low);  // stage1/gamma/final, all cropped

 private:
  GatedModel& model_;
};

struct StepResult {
  LossBreakdown losses;
  double lr = 0;
  double grad_norm = 0;
};

struct TrainStats {
  int epochs_run = 0;
  int64_t steps = 0;
  std::vector<double> epoch_mean_loss;
  double best_psnr = -1;
  int best_epoch = -1;
  std::string best_checkpoint, last_checkpoint;
};

class Trainer {
 public:
  Trainer(GatedModel& model, const AppConfig& cfg);

  // One optimization step; throws NanLoss (with the batch ids) when the
  // loss goes non-finite.
  StepResult step(const Batch& batch, double lr);

  // Scans the configured corpus (plus extras) into train/test manifests.
  ScanResult scan() const;

  // Full loop: epochs x shuffled batches, per-step JSONL log, periodic
  // validation PSNR, best/last checkpoints.
  TrainStats run();

  double validate(const DatasetManifest& test);  // mean PSNR; -1 if no refs
  int64_t global_step() const { return global_step_; }

 private:
  void save(const std::string& path, int epoch);

  GatedModel& model_;
  AppConfig cfg_;
  Adam opt_;
  ParamList params_;
  int64_t global_step_ = 0;
};

}  // namespace gated
