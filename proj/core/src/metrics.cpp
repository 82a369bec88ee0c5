#include "gated/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gated/errors.hpp"
#include "gated/image_io.hpp"
#include "gated/losses.hpp"

namespace fs = std::filesystem;

namespace gated {

double psnr(const Tensor& pred, const Tensor& ref, double max_val) {
  check_same_shape(pred, ref, "psnr");
  double se = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - ref[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(pred.numel());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(max_val * max_val / mse));
}

double mae(const Tensor& pred, const Tensor& ref) {
  return static_cast<double>(l1_loss(pred, ref));
}

double run_scorer(const ExternalScorer& s, const std::string& pred_png,
                  const std::string& ref_png) {
  std::string cmd = s.command + " '" + pred_png + "'";
  if (s.mode == ScorerMode::full_reference) {
    if (ref_png.empty()) throw MissingReference("scorer " + s.name + " needs a reference image");
    cmd += " '" + ref_png + "'";
  }
  cmd += " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw ScorerFailure("failed to launch scorer " + s.name);
  char buf[256] = {0};
  std::string out;
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  const int status = pclose(pipe);
  if (status != 0)
    throw ScorerFailure("scorer " + s.name + " exited with status " + std::to_string(status));
  char* end = nullptr;
  const double v = std::strtod(out.c_str(), &end);
  if (end == out.c_str() || !std::isfinite(v))
    throw ScorerFailure("scorer " + s.name + " produced no scalar: '" + out + "'");
  return v;
}

void MetricReport::finalize() {
  n = per_image.size();
  aggregate.clear();
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& row : per_image)
    for (const auto& [k, v] : row) {
      acc[k].first += v;
      acc[k].second += 1;
    }
  for (const auto& [k, sv] : acc) aggregate[k] = sv.first / sv.second;
}

void MetricReport::write_csv(const std::string& path) const {
  std::set<std::string> cols;
  for (const auto& row : per_image)
    for (const auto& [k, _] : row) cols.insert(k);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "id";
  for (const auto& c : cols) f << "," << c;
  f << "\n";
  for (size_t i = 0; i < per_image.size(); ++i) {
    f << ids[i];
    for (const auto& c : cols) {
      f << ",";
      auto it = per_image[i].find(c);
      if (it != per_image[i].end()) f << it->second;
    }
    f << "\n";
  }
  if (!f.good()) throw IoError("failed writing " + path);
}

std::string MetricReport::to_json(int indent) const {
  nlohmann::json j;
  j["n"] = n;
  j["aggregate"] = aggregate;
  j["failures"] = failures;
  return j.dump(indent);
}

MetricReport evaluate(Enhancer& model, const DatasetManifest& manifest, const EvalOptions& opt) {
  if (manifest.entries.empty()) throw ConfigError("evaluation manifest is empty");

  const bool wants_full_ref =
      !opt.metrics.empty() ||
      std::any_of(opt.scorers.begin(), opt.scorers.end(),
                  [](const ExternalScorer& s) { return s.mode == ScorerMode::full_reference; });
  const bool has_refs = std::all_of(manifest.entries.begin(), manifest.entries.end(),
                                    [](const ManifestEntry& e) { return !e.ref_path.empty(); });
  if (wants_full_ref && !has_refs)
    throw MissingReference(
        "full-reference metrics requested on a dataset without reference images");

  for (const auto& m : opt.metrics)
    if (m != "psnr" && m != "ssim" && m != "mae")
      throw ConfigError("unknown metric '" + m + "' (in-house metrics: psnr, ssim, mae)");

  fs::path work = opt.workdir.empty()
                      ? fs::temp_directory_path() / ("gated_eval_" + std::to_string(::getpid()))
                      : fs::path(opt.workdir);
  const bool need_pngs = !opt.scorers.empty() || !opt.save_outputs_dir.empty();
  if (need_pngs) fs::create_directories(work);
  if (!opt.save_outputs_dir.empty()) fs::create_directories(opt.save_outputs_dir);

  MetricReport report;
  for (const auto& entry : manifest.entries) {
    PairedSample s = load_pair(entry, opt.height, opt.width, opt.native, opt.replicate_grayscale);
    Tensor out = model.enhance(s.low);
    std::map<std::string, double> row;
    for (const auto& m : opt.metrics) {
      if (m == "psnr") row["psnr"] = psnr(out, *s.ref);
      if (m == "ssim") row["ssim"] = static_cast<double>(ssim(out, *s.ref));
      if (m == "mae") row["mae"] = mae(out, *s.ref);
    }
    if (need_pngs) {
      std::string stem = entry.id;
      std::replace(stem.begin(), stem.end(), '/', '_');
      const fs::path base = opt.save_outputs_dir.empty() ? work : fs::path(opt.save_outputs_dir);
      const std::string pred_png = (base / (stem + "_enhanced.png")).string();
      save_image(out, pred_png);
      std::string ref_png;
      if (s.ref && !opt.scorers.empty()) {
        ref_png = (work / (stem + "_ref.png")).string();
        save_image(*s.ref, ref_png);
      }
      for (const auto& sc : opt.scorers) {
        try {
          row[sc.name] = run_scorer(sc, pred_png, ref_png);
        } catch (const ScorerFailure&) {
          report.failures[sc.name] += 1;
        }
      }
    }
    report.ids.push_back(entry.id);
    report.per_image.push_back(std::move(row));
  }
  report.finalize();
  if (need_pngs && opt.workdir.empty()) {
    std::error_code ec;
    fs::remove_all(work, ec);  // scratch only; saved outputs live elsewhere
  }
  return report;
}

}  // namespace gated
