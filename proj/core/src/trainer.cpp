#include "gated/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "gated/errors.hpp"
#include "gated/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gated {

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::ensure(const ParamList& params) {
  if (m_.size() == params.size()) return;
  m_.assign(params.size(), {});
  v_.assign(params.size(), {});
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    m_[i].assign(params[i].value->numel(), 0.f);
    v_[i].assign(params[i].value->numel(), 0.f);
  }
}

double Adam::step(const ParamList& params, double lr, double clip_norm) {
  ensure(params);
  double sq = 0;
  for (const auto& p : params) {
    if (!p.trainable) continue;
    for (float g : p.grad->vec()) sq += double(g) * double(g);
  }
  const double norm = std::sqrt(sq);
  const float scale = (clip_norm > 0 && norm > clip_norm)
                          ? static_cast<float>(clip_norm / norm)
                          : 1.f;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    float* w = params[i].value->data();
    const float* g = params[i].grad->data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t k = 0; k < m.size(); ++k) {
      const double gk = double(g[k]) * scale;
      m[k] = static_cast<float>(beta1_ * m[k] + (1 - beta1_) * gk);
      v[k] = static_cast<float>(beta2_ * v[k] + (1 - beta2_) * gk * gk);
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
  return norm;
}

NamedTensors Adam::export_state(const ParamList& params) const {
  NamedTensors out;
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const auto sh = params[i].value->shape();
    Tensor m(sh[0], sh[1], sh[2], sh[3]), v(sh[0], sh[1], sh[2], sh[3]);
    if (i < m_.size() && !m_[i].empty()) {
      std::copy(m_[i].begin(), m_[i].end(), m.data());
      std::copy(v_[i].begin(), v_[i].end(), v.data());
    }
    out.emplace_back(params[i].name + ".m", std::move(m));
    out.emplace_back(params[i].name + ".v", std::move(v));
  }
  return out;
}

void Adam::import_state(const ParamList& params, const NamedTensors& state, int64_t t) {
  ensure(params);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, tens] : state) by_name[name] = &tens;
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    auto mi = by_name.find(params[i].name + ".m");
    auto vi = by_name.find(params[i].name + ".v");
    if (mi == by_name.end() || vi == by_name.end())
      throw ShapeError("optimizer state missing moments for " + params[i].name);
    if (mi->second->numel() != m_[i].size())
      throw ShapeError("optimizer state size mismatch for " + params[i].name);
    std::copy(mi->second->vec().begin(), mi->second->vec().end(), m_[i].begin());
    std::copy(vi->second->vec().begin(), vi->second->vec().end(), v_[i].begin());
  }
  t_ = t;
}

double cosine_lr(double base, double min_lr, int epoch, int total_epochs) {
  if (total_epochs <= 1) return base;
  const double frac = double(epoch) / double(total_epochs - 1);
  return min_lr + 0.5 * (base - min_lr) * (1.0 + std::cos(std::numbers::pi * frac));
}

Tensor ModelEnhancer::enhance(const Tensor& low) { return enhance_all(low).final; }

GatedOut ModelEnhancer::enhance_all(const Tensor& low) {
  model_.set_train(false);
  const Tensor padded = pad_to_multiple_reflect(low, 16);
  GatedOut out = model_.forward(padded);
  model_.zero_grad();
  if (padded.h() != low.h() || padded.w() != low.w()) {
    out.stage1 = crop_top_left(out.stage1, low.h(), low.w());
    out.gamma = crop_top_left(out.gamma, low.h(), low.w());
    out.final = crop_top_left(out.final, low.h(), low.w());
  }
  return out;
}

Trainer::Trainer(GatedModel& model, const AppConfig& cfg)
    : model_(model), cfg_(cfg), params_(model.state()) {}

StepResult Trainer::step(const Batch& batch, double lr) {
  if (batch.ref.empty()) throw ConfigError("training requires paired references");
  model_.set_train(true);
  model_.zero_grad();

  GatedOut out = model_.forward(batch.low);
  Tensor g_stage1, g_final, g_gamma;
  StepResult r;
  r.losses = total_loss_backward(out.stage1, out.final, batch.ref, out.gamma, cfg_.loss,
                                 g_stage1, g_final, g_gamma);
  if (!std::isfinite(r.losses.total)) {
    std::string ids;
    for (const auto& id : batch.ids) ids += (ids.empty() ? "" : ", ") + id;
    throw NanLoss("non-finite loss at step " + std::to_string(global_step_) +
                  " on batch [" + ids + "]");
  }
  model_.backward(g_final, g_stage1, g_gamma);
  r.grad_norm = opt_.step(params_, lr, cfg_.train.clip_norm);
  r.lr = lr;
  ++global_step_;
  return r;
}

ScanResult Trainer::scan() const {
  std::vector<ScanResult> scans;
  scans.push_back(scan_dataset(cfg_.data.root, cfg_.data.layout));
  for (const auto& e : cfg_.data.extra) scans.push_back(scan_dataset(e.root, e.layout));
  ScanResult merged = scans.size() == 1 ? std::move(scans[0]) : merge_scans(scans);
  for (const auto& w : merged.warnings) std::cerr << "warning: " << w << "\n";
  return merged;
}

double Trainer::validate(const DatasetManifest& test) {
  DatasetManifest paired{{}, test.split};
  for (const auto& e : test.entries)
    if (!e.ref_path.empty()) paired.entries.push_back(e);
  if (paired.entries.empty()) return -1;

  ModelEnhancer enhancer(model_);
  double sum = 0;
  for (const auto& e : paired.entries) {
    PairedSample s = load_pair(e, cfg_.data.size, cfg_.data.size, false,
                               cfg_.data.replicate_grayscale);
    sum += psnr(enhancer.enhance(s.low), *s.ref);
  }
  return sum / double(paired.entries.size());
}

void Trainer::save(const std::string& path, int epoch) {
  CheckpointMeta meta;
  meta.epoch = epoch;
  meta.step = global_step_;
  meta.config_json = config_to_json(cfg_).dump();
  save_checkpoint(path, params_, meta, opt_.export_state(params_));
}

TrainStats Trainer::run() {
  ScanResult data = scan();
  for (const auto& e : data.train.entries)
    if (e.ref_path.empty())
      throw ConfigError("training entry without reference: " + e.id);
  if (data.train.entries.empty())
    throw ConfigError("dataset has no training pairs (layout " +
                      layout_to_string(cfg_.data.layout) + ", root " + cfg_.data.root + ")");

  fs::create_directories(cfg_.train.checkpoint_dir);
  const std::string log_path = cfg_.train.log_path.empty()
                                   ? cfg_.train.checkpoint_dir + "/train_log.jsonl"
                                   : cfg_.train.log_path;
  if (auto parent = fs::path(log_path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot open training log: " + log_path);

  TrainStats stats;
  stats.best_checkpoint = cfg_.train.checkpoint_dir + "/best.ckpt";
  stats.last_checkpoint = cfg_.train.checkpoint_dir + "/last.ckpt";
  Rng aug_rng(Rng::mix(cfg_.seed, 0x617567));  // augmentation stream

  for (int epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
    const double lr = cfg_.train.lr_schedule == LrSchedule::cosine
                          ? cosine_lr(cfg_.train.learning_rate, cfg_.train.min_learning_rate,
                                      epoch, cfg_.train.epochs)
                          : cfg_.train.learning_rate;
    const auto batches = make_batches(data.train.entries.size(), cfg_.train.batch_size,
                                      Rng::mix(cfg_.seed, uint64_t(epoch)));
    double epoch_sum = 0;
    for (const auto& idx : batches) {
      Batch batch = load_batch(data.train, idx, cfg_.data.size, cfg_.data.size,
                               cfg_.data.augment_hflip ? &aug_rng : nullptr,
                               cfg_.data.replicate_grayscale);
      StepResult r = step(batch, lr);
      epoch_sum += r.losses.total;

      json rec{{"epoch", epoch},
               {"step", global_step_ - 1},
               {"lr", r.lr},
               {"grad_norm", r.grad_norm}};
      for (const auto& [k, val] : r.losses.flat()) rec["loss"][k] = val;
      log << rec.dump() << "\n";
    }
    log.flush();
    stats.epoch_mean_loss.push_back(epoch_sum / double(batches.size()));
    stats.epochs_run = epoch + 1;

    const bool last_epoch = epoch + 1 == cfg_.train.epochs;
    if ((epoch + 1) % cfg_.train.eval_every == 0 || last_epoch) {
      const double val_psnr = validate(data.test);
      if (val_psnr >= 0) {
        json rec{{"epoch", epoch}, {"event", "validation"}, {"psnr", val_psnr}};
        log << rec.dump() << "\n";
        log.flush();
        if (val_psnr > stats.best_psnr) {
          stats.best_psnr = val_psnr;
          stats.best_epoch = epoch;
          save(stats.best_checkpoint, epoch);
        }
      }
    }
  }
  save(stats.last_checkpoint, cfg_.train.epochs - 1);
  if (stats.best_epoch < 0) stats.best_checkpoint.clear();
  stats.steps = global_step_;
  return stats;
}

}  // namespace gated
