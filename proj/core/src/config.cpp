#include "gated/config.hpp"

#include <fstream>

#include "gated/errors.hpp"

using nlohmann::json;

namespace gated {

namespace {

std::string ssim_mode_to_string(SsimMode m) {
  return m == SsimMode::windowed ? "windowed" : "global";
}

SsimMode ssim_mode_from_string(const std::string& s) {
  if (s == "windowed") return SsimMode::windowed;
  if (s == "global") return SsimMode::global;
  throw ConfigError("loss.ssim_mode must be 'windowed' or 'global', got '" + s + "'");
}

std::string schedule_to_string(LrSchedule s) {
  return s == LrSchedule::cosine ? "cosine" : "constant";
}

LrSchedule schedule_from_string(const std::string& s) {
  if (s == "cosine") return LrSchedule::cosine;
  if (s == "constant") return LrSchedule::constant;
  throw ConfigError("trainer.lr_schedule must be 'cosine' or 'constant', got '" + s + "'");
}

// Structural merge: every key of src must exist in dst (same spelling as the
// default schema); objects recurse, everything else overwrites.
void merge_checked(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object())
    throw ConfigError("config node '" + (prefix.empty() ? "<root>" : prefix) +
                      "' must be an object");
  for (const auto& [key, val] : src.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = dst.find(key);
    if (it == dst.end()) throw ConfigError("unknown config key '" + path + "'");
    if (it->is_object() && !it->empty()) {
      merge_checked(*it, val, path);
    } else {
      *it = val;
    }
  }
}

template <typename T>
T get_num(const json& j, const std::string& path) {
  const json* node = &j;
  std::string part, rest = path;
  for (size_t pos; (pos = rest.find('.')) != std::string::npos; rest.erase(0, pos + 1))
    node = &node->at(rest.substr(0, pos));
  node = &node->at(rest);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!node->is_string()) throw ConfigError("config key '" + path + "' must be a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!node->is_boolean()) throw ConfigError("config key '" + path + "' must be a boolean");
  } else {
    if (!node->is_number()) throw ConfigError("config key '" + path + "' must be a number");
  }
  return node->get<T>();
}

}  // namespace

json default_config_json() {
  return json{
      {"seed", 7},
      {"dataset",
       {{"layout", "lolv1"},
        {"root", ""},
        {"extra", json::array()},
        {"size", 128},
        {"augment_hflip", false},
        {"replicate_grayscale", false}}},
      {"loss",
       {{"alpha", 0.5},
        {"beta", 0.2},
        {"gamma", 0.2},
        {"delta", 0.1},
        {"lambda_tv", 1.0},
        {"lambda_color", 0.5},
        {"lambda_gamma", 0.1},
        {"gamma_target", 1.0},
        {"stage1_weight", 0.3},
        {"stage2_weight", 0.7},
        {"ssim_mode", "windowed"}}},
      {"trainer",
       {{"epochs", 100},
        {"batch_size", 8},
        {"learning_rate", 2e-4},
        {"min_learning_rate", 1e-6},
        {"lr_schedule", "cosine"},
        {"clip_norm", 1.0},
        {"checkpoint_dir", "checkpoints"},
        {"eval_every", 1},
        {"log_path", ""}}},
  };
}

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json user;
  try {
    user = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  json cfg = default_config_json();
  merge_checked(cfg, user, "");
  return cfg;
}

void apply_override(json& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json* node = &cfg;
  std::string rest = key;
  std::string walked;
  for (;;) {
    const size_t dot = rest.find('.');
    const std::string part = rest.substr(0, dot);
    walked = walked.empty() ? part : walked + "." + part;
    auto it = node->find(part);
    if (it == node->end()) throw ConfigError("unknown config key '" + walked + "'");
    node = &*it;
    if (dot == std::string::npos) break;
    rest.erase(0, dot + 1);
    if (!node->is_object())
      throw ConfigError("config key '" + walked + "' has no sub-keys");
  }
  if (node->is_object() && !node->empty())
    throw ConfigError("config key '" + key + "' is a section, not a value");

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // unquoted strings like layout=lolv1
  if (node->is_string() && !value.is_string()) value = raw;
  *node = value;
}

AppConfig config_from_json(const json& j) {
  AppConfig c;
  try {
    c.seed = get_num<uint64_t>(j, "seed");

    c.data.layout = layout_from_string(get_num<std::string>(j, "dataset.layout"));
    c.data.root = get_num<std::string>(j, "dataset.root");
    c.data.size = get_num<int>(j, "dataset.size");
    c.data.augment_hflip = get_num<bool>(j, "dataset.augment_hflip");
    c.data.replicate_grayscale = get_num<bool>(j, "dataset.replicate_grayscale");
    for (const auto& e : j.at("dataset").at("extra")) {
      SourceSpec s;
      s.layout = layout_from_string(e.at("layout").get<std::string>());
      s.root = e.at("root").get<std::string>();
      c.data.extra.push_back(std::move(s));
    }

    c.loss.alpha = static_cast<float>(get_num<double>(j, "loss.alpha"));
    c.loss.beta = static_cast<float>(get_num<double>(j, "loss.beta"));
    c.loss.gamma_w = static_cast<float>(get_num<double>(j, "loss.gamma"));
    c.loss.delta = static_cast<float>(get_num<double>(j, "loss.delta"));
    c.loss.lambda_tv = static_cast<float>(get_num<double>(j, "loss.lambda_tv"));
    c.loss.lambda_c = static_cast<float>(get_num<double>(j, "loss.lambda_color"));
    c.loss.lambda_gamma = static_cast<float>(get_num<double>(j, "loss.lambda_gamma"));
    c.loss.gamma_target = static_cast<float>(get_num<double>(j, "loss.gamma_target"));
    c.loss.stage1_weight = static_cast<float>(get_num<double>(j, "loss.stage1_weight"));
    c.loss.stage2_weight = static_cast<float>(get_num<double>(j, "loss.stage2_weight"));
    c.loss.ssim_mode = ssim_mode_from_string(get_num<std::string>(j, "loss.ssim_mode"));

    c.train.epochs = get_num<int>(j, "trainer.epochs");
    c.train.batch_size = get_num<int>(j, "trainer.batch_size");
    c.train.learning_rate = get_num<double>(j, "trainer.learning_rate");
    c.train.min_learning_rate = get_num<double>(j, "trainer.min_learning_rate");
    c.train.lr_schedule = schedule_from_string(get_num<std::string>(j, "trainer.lr_schedule"));
    c.train.clip_norm = get_num<double>(j, "trainer.clip_norm");
    c.train.checkpoint_dir = get_num<std::string>(j, "trainer.checkpoint_dir");
    c.train.eval_every = get_num<int>(j, "trainer.eval_every");
    c.train.log_path = get_num<std::string>(j, "trainer.log_path");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  if (c.train.epochs < 1) throw ConfigError("trainer.epochs must be >= 1");
  if (c.train.batch_size < 1) throw ConfigError("trainer.batch_size must be >= 1");
  if (c.train.learning_rate <= 0) throw ConfigError("trainer.learning_rate must be > 0");
  if (c.train.min_learning_rate < 0) throw ConfigError("trainer.min_learning_rate must be >= 0");
  if (c.train.eval_every < 1) throw ConfigError("trainer.eval_every must be >= 1");
  if (c.data.size < 16 || c.data.size % 16 != 0)
    throw ConfigError("dataset.size must be a positive multiple of 16");
  return c;
}

json config_to_json(const AppConfig& c) {
  json j = default_config_json();
  j["seed"] = c.seed;
  auto& d = j["dataset"];
  d["layout"] = layout_to_string(c.data.layout);
  d["root"] = c.data.root;
  d["size"] = c.data.size;
  d["augment_hflip"] = c.data.augment_hflip;
  d["replicate_grayscale"] = c.data.replicate_grayscale;
  d["extra"] = json::array();
  for (const auto& e : c.data.extra)
    d["extra"].push_back({{"layout", layout_to_string(e.layout)}, {"root", e.root}});
  auto& l = j["loss"];
  l["alpha"] = c.loss.alpha;
  l["beta"] = c.loss.beta;
  l["gamma"] = c.loss.gamma_w;
  l["delta"] = c.loss.delta;
  l["lambda_tv"] = c.loss.lambda_tv;
  l["lambda_color"] = c.loss.lambda_c;
  l["lambda_gamma"] = c.loss.lambda_gamma;
  l["gamma_target"] = c.loss.gamma_target;
  l["stage1_weight"] = c.loss.stage1_weight;
  l["stage2_weight"] = c.loss.stage2_weight;
  l["ssim_mode"] = ssim_mode_to_string(c.loss.ssim_mode);
  auto& t = j["trainer"];
  t["epochs"] = c.train.epochs;
  t["batch_size"] = c.train.batch_size;
  t["learning_rate"] = c.train.learning_rate;
  t["min_learning_rate"] = c.train.min_learning_rate;
  t["lr_schedule"] = schedule_to_string(c.train.lr_schedule);
  t["clip_norm"] = c.train.clip_norm;
  t["checkpoint_dir"] = c.train.checkpoint_dir;
  t["eval_every"] = c.train.eval_every;
  t["log_path"] = c.train.log_path;
  return j;
}

AppConfig make_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  json j = config_path.empty() ? default_config_json() : load_config_file(config_path);
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

}  // namespace gated
