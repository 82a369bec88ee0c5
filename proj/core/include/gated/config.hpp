#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gated/dataset.hpp"
#include "gated/losses.hpp"

namespace gated {

enum class LrSchedule { cosine, constant };

// Additional corpus merged into the primary one for combined-dataset runs.
struct SourceSpec {
  Layout layout = Layout::generic_paired;
  std::string root;
};

struct DataConfig {
  Layout layout = Layout::lolv1;
  std::string root;
  std::vector<SourceSpec> extra;
  int size = 128;                    // train/eval side length (square resize)
  bool augment_hflip = false;
  bool replicate_grayscale = false;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 2e-4;
  double min_learning_rate = 1e-6;
  LrSchedule lr_schedule = LrSchedule::cosine;
  double clip_norm = 1.0;            // global gradient norm; <= 0 disables
  std::string checkpoint_dir = "checkpoints";
  int eval_every = 1;                // epochs between validation passes
  std::string log_path;              // default <checkpoint_dir>/train_log.jsonl
};

struct AppConfig {
  uint64_t seed = 7;
  DataConfig data;
  LossWeights loss;
  TrainConfig train;
};

// Full schema with default values; user files and overrides are merged onto
// this, and any key not present here is rejected with ConfigError.
nlohmann::json default_config_json();

// Parses a JSON config file and merges it over the defaults.
nlohmann::json load_config_file(const std::string& path);

// Applies one "dotted.key=value" override. The value is parsed as JSON when
// possible, else taken as a string. Unknown keys raise ConfigError.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// Validates ranges/enums and converts to the typed config.
AppConfig config_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const AppConfig& c);

// Convenience: defaults, optional file, overrides, validate.
AppConfig make_config(const std::string& config_path,
                      const std::vector<std::string>& overrides);

}  // namespace gated
