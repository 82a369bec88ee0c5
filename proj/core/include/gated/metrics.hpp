#pragma once

#include <map>
#include <string>
#include <vector>

#include "gated/dataset.hpp"
#include "gated/tensor.hpp"

namespace gated {

// 10*log10(max_val^2 / MSE); zero-MSE pinned to 100 dB (and 100 dB is the
// cap) so aggregation stays finite.
double psnr(const Tensor& pred, const Tensor& ref, double max_val = 1.0);

// Mean absolute error; same math as the L1 loss.
double mae(const Tensor& pred, const Tensor& ref);

// Inference boundary used by evaluation: (1, 3, H, W) in, same shape out.
class Enhancer {
 public:
  virtual ~Enhancer() = default;
  virtual Tensor enhance(const Tensor& low) = 0;
};

class IdentityEnhancer final : public Enhancer {
 public:
  Tensor enhance(const Tensor& low) override { return low; }
};

enum class ScorerMode { full_reference, no_reference };

// Subprocess plugin: invoked as `command <pred.png> [<ref.png>]`, must print
// one scalar line on stdout and exit 0.
struct ExternalScorer {
  std::string name;
  ScorerMode mode = ScorerMode::no_reference;
  std::string command;
};

// Throws ScorerFailure on nonzero exit or unparsable output.
double run_scorer(const ExternalScorer& s, const std::string& pred_png,
                  const std::string& ref_png = "");

struct MetricReport {
  std::vector<std::string> ids;
  std::vector<std::map<std::string, double>> per_image;
  std::map<std::string, double> aggregate;  // mean over images with the value present
  std::map<std::string, int> failures;      // scorer failures per metric name
  size_t n = 0;

  void finalize();
  void write_csv(const std::string& path) const;
  std::string to_json(int indent = 2) const;
};

struct EvalOptions {
  int height = 128, width = 128;
  bool native = false;                                 // native res instead of the fixed size
  std::vector<std::string> metrics{"psnr", "ssim", "mae"};  // in-house, full-reference
  std::vector<ExternalScorer> scorers;
  std::string workdir;           // where scorer PNGs are written (default: temp dir)
  std::string save_outputs_dir;  // also keep enhanced PNGs here when non-empty
  bool replicate_grayscale = false;
};

// Runs the enhancer over the manifest and scores each output. Full-reference
// metrics and scorers require references (MissingReference otherwise);
// scorer crashes are recorded and evaluation continues.
MetricReport evaluate(Enhancer& model, const DatasetManifest& manifest, const EvalOptions& opt);

}  // namespace gated
