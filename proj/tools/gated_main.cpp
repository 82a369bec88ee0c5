// gated: low-light enhancement CLI.
//   train            optimize the dual-stage model on a paired corpus
//   enhance          run a checkpoint over an image file or directory
//   evaluate         score a checkpoint (or the identity baseline) on a dataset
//   inspect-gamma    report the stage-1 exponent map for one image
//   export-manifest  dump a dataset scan as JSON lines
// Exit codes: 0 success, 2 usage/config, 3 runtime-numeric, 4 I/O.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gated/checkpoint.hpp"
#include "gated/config.hpp"
#include "gated/dataset.hpp"
#include "gated/errors.hpp"
#include "gated/image_io.hpp"
#include "gated/metrics.hpp"
#include "gated/trainer.hpp"
#include "gated/unet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_raster(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  static const char* kExts[] = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"};
  return std::any_of(std::begin(kExts), std::end(kExts),
                     [&](const char* e) { return ext == e; });
}

std::vector<fs::path> gather_inputs(const std::string& input) {
  fs::path p(input);
  if (!fs::exists(p)) throw gated::IoError("input not found: " + input);
  if (fs::is_regular_file(p)) return {p};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(p))
    if (e.is_regular_file() && is_raster(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw gated::IoError("no raster images under directory: " + input);
  return files;
}

std::unique_ptr<gated::GatedModel> load_model(const std::string& checkpoint) {
  auto model = std::make_unique<gated::GatedModel>(0);
  gated::load_checkpoint(checkpoint, model->state());
  model->set_train(false);
  return model;
}

gated::Tensor gamma_to_viz(const gated::Tensor& gamma) {
  gated::Tensor viz = gamma;
  for (auto& v : viz.vec()) v = (v - 0.5f) / 1.5f;
  return viz;
}

gated::ExternalScorer parse_scorer(const std::string& spec) {
  const size_t a = spec.find(':');
  const size_t b = a == std::string::npos ? std::string::npos : spec.find(':', a + 1);
  if (b == std::string::npos)
    throw gated::ConfigError("scorer spec must be name:mode:command, got '" + spec + "'");
  gated::ExternalScorer s;
  s.name = spec.substr(0, a);
  const std::string mode = spec.substr(a + 1, b - a - 1);
  if (mode == "full_reference") {
    s.mode = gated::ScorerMode::full_reference;
  } else if (mode == "no_reference") {
    s.mode = gated::ScorerMode::no_reference;
  } else {
    throw gated::ConfigError("scorer mode must be full_reference or no_reference, got '" +
                             mode + "'");
  }
  s.command = spec.substr(b + 1);
  if (s.name.empty() || s.command.empty())
    throw gated::ConfigError("scorer spec must be name:mode:command, got '" + spec + "'");
  return s;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  gated::AppConfig cfg = gated::make_config(config_path, overrides);
  if (cfg.data.root.empty())
    throw gated::ConfigError("dataset.root must be set (--override dataset.root=/path)");

  gated::GatedModel model(cfg.seed);
  std::cout << "parameters: " << model.param_count() << "\n";
  gated::Trainer trainer(model, cfg);
  gated::TrainStats stats = trainer.run();

  std::cout << "epochs: " << stats.epochs_run << "  steps: " << stats.steps << "\n";
  if (stats.best_epoch >= 0)
    std::cout << "best validation psnr: " << stats.best_psnr << " dB (epoch "
              << stats.best_epoch << ") -> " << stats.best_checkpoint << "\n";
  std::cout << "last checkpoint: " << stats.last_checkpoint << "\n";
  return 0;
}

int cmd_enhance(const std::string& checkpoint, const std::string& input,
                const std::string& output, bool save_intermediate, bool replicate_gray) {
  auto model = load_model(checkpoint);
  gated::ModelEnhancer enhancer(*model);
  fs::create_directories(output);

  for (const auto& file : gather_inputs(input)) {
    const gated::Tensor low = gated::load_image(file.string(), replicate_gray);
    gated::GatedOut out = enhancer.enhance_all(low);
    const std::string stem = file.stem().string();
    gated::save_image(out.final, (fs::path(output) / (stem + "_enhanced.png")).string());
    if (save_intermediate) {
      gated::save_image(out.stage1, (fs::path(output) / (stem + "_stage1.png")).string());
      gated::save_image(gamma_to_viz(out.gamma),
                        (fs::path(output) / (stem + "_gamma.png")).string());
    }
    std::cout << file.filename().string() << " -> " << stem << "_enhanced.png\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, bool identity, const std::string& root,
                 const std::string& layout, const std::string& split,
                 const gated::EvalOptions& opt, const std::string& report_dir) {
  gated::ScanResult scan = gated::scan_dataset(root, gated::layout_from_string(layout));
  for (const auto& w : scan.warnings) std::cerr << "warning: " << w << "\n";
  const gated::DatasetManifest& manifest = split == "train" ? scan.train : scan.test;

  std::unique_ptr<gated::GatedModel> model;
  std::unique_ptr<gated::Enhancer> enhancer;
  if (identity) {
    enhancer = std::make_unique<gated::IdentityEnhancer>();
  } else {
    if (checkpoint.empty())
      throw gated::ConfigError("evaluate needs --checkpoint or --identity");
    model = load_model(checkpoint);
    enhancer = std::make_unique<gated::ModelEnhancer>(*model);
  }

  gated::MetricReport report = gated::evaluate(*enhancer, manifest, opt);

  std::cout << "images: " << report.n << "\n";
  for (const auto& [name, mean] : report.aggregate) std::cout << name << ": " << mean << "\n";
  for (const auto& [name, count] : report.failures)
    std::cout << name << " failures: " << count << "\n";

  fs::create_directories(report_dir);
  const std::string csv = (fs::path(report_dir) / "per_image.csv").string();
  const std::string js = (fs::path(report_dir) / "aggregate.json").string();
  report.write_csv(csv);
  std::ofstream jf(js);
  if (!jf) throw gated::IoError("cannot write " + js);
  jf << report.to_json() << "\n";
  std::cout << "wrote " << csv << " and " << js << "\n";
  return 0;
}

int cmd_inspect_gamma(const std::string& checkpoint, const std::string& input,
                      const std::string& save, bool replicate_gray) {
  auto model = load_model(checkpoint);
  gated::ModelEnhancer enhancer(*model);
  const gated::Tensor low = gated::load_image(input, replicate_gray);
  gated::GatedOut out = enhancer.enhance_all(low);

  json stats;
  const char* names[3] = {"r", "g", "b"};
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    const float* p = out.gamma.plane(0, c);
    const size_t hw = size_t(out.gamma.h()) * out.gamma.w();
    double lo = p[0], hi = p[0], sum = 0;
    for (size_t i = 0; i < hw; ++i) {
      lo = std::min<double>(lo, p[i]);
      hi = std::max<double>(hi, p[i]);
      sum += p[i];
    }
    stats[names[c]] = {{"min", lo}, {"mean", sum / double(hw)}, {"max", hi}};
    total += sum / double(hw);
  }
  stats["mean"] = total / 3.0;
  std::cout << stats.dump(2) << "\n";
  if (!save.empty()) gated::save_image(gamma_to_viz(out.gamma), save);
  return 0;
}

int cmd_export_manifest(const std::string& root, const std::string& layout,
                        const std::string& out_path) {
  gated::ScanResult scan = gated::scan_dataset(root, gated::layout_from_string(layout));
  for (const auto& w : scan.warnings) std::cerr << "warning: " << w << "\n";
  if (out_path.empty() || out_path == "-") {
    gated::export_manifest_jsonl(scan, std::cout);
  } else {
    std::ofstream f(out_path);
    if (!f) throw gated::IoError("cannot write " + out_path);
    gated::export_manifest_jsonl(scan, f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gated: dual-stage low-light image enhancement"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "Train the model");
  train->add_option("--config", config_path, "JSON config file (defaults when omitted)");
  train->add_option("--override", overrides, "dotted.key=value config override");

  std::string checkpoint, input, output;
  bool save_intermediate = false, replicate_gray = false;
  auto* enhance = app.add_subcommand("enhance", "Enhance an image or directory");
  enhance->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  enhance->add_option("input", input, "Image file or directory")->required();
  enhance->add_option("--output", output, "Output directory")->required();
  enhance->add_flag("--save-intermediate", save_intermediate,
                    "Also write stage-1 and gamma-map images");
  enhance->add_flag("--replicate-grayscale", replicate_gray,
                    "Accept 1-channel inputs by replication");

  std::string ev_checkpoint, ev_root, ev_layout = "lolv1", ev_split = "test";
  std::string ev_metrics = "psnr,ssim,mae", ev_report = ".", ev_save_outputs;
  std::vector<std::string> ev_scorers;
  bool ev_identity = false, ev_native = false, ev_replicate = false;
  int ev_size = 128;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a dataset split");
  evaluate->add_option("--checkpoint", ev_checkpoint, "Model checkpoint");
  evaluate->add_flag("--identity", ev_identity, "Score the unmodified input instead");
  evaluate->add_option("--root", ev_root, "Dataset root")->required();
  evaluate->add_option("--layout", ev_layout,
                       "lolv1|lolv2_real|lolv2_syn|unpaired|generic_paired");
  evaluate->add_option("--split", ev_split, "train|test (default test)");
  evaluate->add_option("--size", ev_size, "Evaluation side length (default 128)");
  evaluate->add_flag("--native", ev_native, "Evaluate at native resolution (pad/crop)");
  evaluate->add_option("--metrics", ev_metrics, "Comma list of psnr,ssim,mae ('' = none)");
  evaluate->add_option("--scorer", ev_scorers, "External scorer name:mode:command");
  evaluate->add_option("--report-dir", ev_report, "Where CSV/JSON reports go (default .)");
  evaluate->add_option("--save-outputs", ev_save_outputs, "Keep enhanced PNGs here");
  evaluate->add_flag("--replicate-grayscale", ev_replicate,
                     "Accept 1-channel inputs by replication");

  std::string ig_checkpoint, ig_input, ig_save;
  bool ig_replicate = false;
  auto* inspect = app.add_subcommand("inspect-gamma", "Report the exponent map statistics");
  inspect->add_option("--checkpoint", ig_checkpoint, "Model checkpoint")->required();
  inspect->add_option("input", ig_input, "Image file")->required();
  inspect->add_option("--save", ig_save, "Write the gamma visualization PNG here");
  inspect->add_flag("--replicate-grayscale", ig_replicate,
                    "Accept 1-channel inputs by replication");

  std::string em_root, em_layout = "lolv1", em_out;
  auto* exp = app.add_subcommand("export-manifest", "Dump a dataset scan as JSON lines");
  exp->add_option("--root", em_root, "Dataset root")->required();
  exp->add_option("--layout", em_layout, "Dataset layout");
  exp->add_option("--out", em_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(config_path, overrides);
    if (*enhance)
      return cmd_enhance(checkpoint, input, output, save_intermediate, replicate_gray);
    if (*evaluate) {
      gated::EvalOptions opt;
      opt.height = opt.width = ev_size;
      opt.native = ev_native;
      opt.metrics.clear();
      std::stringstream ss(ev_metrics);
      for (std::string m; std::getline(ss, m, ',');)
        if (!m.empty()) opt.metrics.push_back(m);
      for (const auto& s : ev_scorers) opt.scorers.push_back(parse_scorer(s));
      opt.save_outputs_dir = ev_save_outputs;
      opt.replicate_grayscale = ev_replicate;
      return cmd_evaluate(ev_checkpoint, ev_identity, ev_root, ev_layout, ev_split, opt,
                          ev_report);
    }
    if (*inspect) return cmd_inspect_gamma(ig_checkpoint, ig_input, ig_save, ig_replicate);
    if (*exp) return cmd_export_manifest(em_root, em_layout, em_out);
  } catch (const gated::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
