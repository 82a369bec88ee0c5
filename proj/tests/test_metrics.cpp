#include <doctest.h>

#include <cmath>
#include <fstream>

#include "gated/dataset.hpp"
#include "gated/errors.hpp"
#include "gated/image_io.hpp"
#include "gated/metrics.hpp"
#include "testutil.hpp"

using testutil::TempDir;

namespace {

void write_script(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p);
  f << "#!/bin/sh\n" << body << "\n";
  f.close();
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
}

gated::ScanResult tiny_paired_corpus(const TempDir& dir, int n = 2) {
  for (int i = 0; i < n; ++i) {
    gated::Tensor low = testutil::random_tensor<float>(1, 3, 12, 12, 300 + i, 0.05f, 0.4f);
    gated::Tensor high = testutil::random_tensor<float>(1, 3, 12, 12, 400 + i, 0.5f, 0.95f);
    gated::save_image(low, (dir.path() / ("low/i" + std::to_string(i) + ".png")).string());
    gated::save_image(high, (dir.path() / ("high/i" + std::to_string(i) + ".png")).string());
  }
  return gated::scan_dataset(dir.str(), gated::Layout::generic_paired);
}

}  // namespace

TEST_CASE("psnr closed forms") {
  gated::Tensor a(1, 3, 4, 4), b(1, 3, 4, 4);
  a.fill(0.5f);
  b.fill(0.6f);  // MSE = 0.01 -> 20 dB
  CHECK(gated::psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(gated::psnr(a, a) == doctest::Approx(100.0));  // zero error pins to the cap
  b.fill(0.5f + 1e-7f);
  CHECK(gated::psnr(a, b) <= 100.0 + 1e-9);  // capped, not unbounded

  // mae closed form on exactly representable values
  a.fill(0.25f);
  b.fill(0.75f);
  CHECK(gated::mae(a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("psnr matches the frozen oracle pair") {
  gated::Tensor x, y;
  testutil::make_oracle_pair(x, y);
  CHECK(gated::psnr(x, y) == doctest::Approx(12.084859773216).epsilon(1e-6));
}

TEST_CASE("identity evaluation aggregates in-house metrics") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir);
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  auto report = gated::evaluate(id, scan.train, opt);
  CHECK(report.n == 2);
  REQUIRE(report.per_image.size() == 2);
  CHECK(report.aggregate.count("psnr") == 1);
  CHECK(report.aggregate.count("ssim") == 1);
  CHECK(report.aggregate.count("mae") == 1);
  // identity on dark-vs-bright pairs is a weak baseline: low psnr, high mae
  CHECK(report.aggregate.at("psnr") < 15.0);
  CHECK(report.aggregate.at("mae") > 0.2);
  CHECK(report.aggregate.at("ssim") <= 1.0);
  // aggregate is the mean of the per-image values
  double mean = 0;
  for (auto& row : report.per_image) mean += row.at("psnr");
  mean /= 2;
  CHECK(report.aggregate.at("psnr") == doctest::Approx(mean).epsilon(1e-12));
  CHECK(report.failures.empty());
}

TEST_CASE("report artifacts: csv and json") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir);
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  auto report = gated::evaluate(id, scan.train, opt);

  const auto csv_path = dir.path() / "per_image.csv";
  report.write_csv(csv_path.string());
  std::ifstream csv(csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header.find("id") != std::string::npos);
  CHECK(header.find("psnr") != std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty();
  CHECK(rows == 2);

  const std::string json = report.to_json();
  CHECK(json.find("\"aggregate\"") != std::string::npos);
  CHECK(json.find("\"psnr\"") != std::string::npos);
}

TEST_CASE("full-reference metrics without references fail loudly") {
  TempDir dir("mx");
  gated::Tensor low = testutil::random_tensor<float>(1, 3, 12, 12, 77);
  gated::save_image(low, (dir.path() / "a.png").string());
  auto scan = gated::scan_dataset(dir.str(), gated::Layout::unpaired);
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  CHECK_THROWS_AS(gated::evaluate(id, scan.test, opt), gated::MissingReference);

  opt.metrics.clear();  // no full-reference metrics: evaluation is legal again
  auto report = gated::evaluate(id, scan.test, opt);
  CHECK(report.n == 1);
  CHECK(report.aggregate.empty());
}

TEST_CASE("external scorers run as subprocesses") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir, 2);

  write_script(dir.path() / "const7.sh", "echo 7.25");
  write_script(dir.path() / "boom.sh", "exit 3");
  write_script(dir.path() / "garbled.sh", "echo not-a-number");

  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  opt.metrics = {"psnr"};
  opt.workdir = (dir.path() / "work").string();
  opt.scorers = {
      {"const7", gated::ScorerMode::no_reference, (dir.path() / "const7.sh").string()},
      {"boom", gated::ScorerMode::full_reference, (dir.path() / "boom.sh").string()},
      {"garbled", gated::ScorerMode::no_reference, (dir.path() / "garbled.sh").string()},
  };
  auto report = gated::evaluate(id, scan.train, opt);
  CHECK(report.aggregate.at("const7") == doctest::Approx(7.25));
  CHECK(report.failures.at("boom") == 2);
  CHECK(report.failures.at("garbled") == 2);
  CHECK(report.aggregate.count("boom") == 0);  // no successful samples, no mean
  CHECK(report.aggregate.count("psnr") == 1);  // in-house metric still reported
}

TEST_CASE("run_scorer surfaces command output and failures") {
  TempDir dir("mx");
  gated::Tensor img = testutil::random_tensor<float>(1, 3, 8, 8, 9);
  const auto png = dir.path() / "p.png";
  gated::save_image(img, png.string());

  write_script(dir.path() / "echo_arg.sh", "echo 1.5");
  gated::ExternalScorer ok{"ok", gated::ScorerMode::no_reference,
                           (dir.path() / "echo_arg.sh").string()};
  CHECK(gated::run_scorer(ok, png.string()) == doctest::Approx(1.5));

  write_script(dir.path() / "fail.sh", "exit 1");
  gated::ExternalScorer bad{"bad", gated::ScorerMode::no_reference,
                            (dir.path() / "fail.sh").string()};
  CHECK_THROWS_AS(gated::run_scorer(bad, png.string()), gated::ScorerFailure);
}

TEST_CASE("full-reference scorers receive the reference path") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir, 1);
  // score = number of arguments; full-reference invocations see 2
  write_script(dir.path() / "argc.sh", "echo $#");
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  opt.metrics = {};
  opt.workdir = (dir.path() / "work").string();
  opt.scorers = {{"argc_fr", gated::ScorerMode::full_reference, (dir.path() / "argc.sh").string()},
                 {"argc_nr", gated::ScorerMode::no_reference, (dir.path() / "argc.sh").string()}};
  auto report = gated::evaluate(id, scan.train, opt);
  CHECK(report.aggregate.at("argc_fr") == doctest::Approx(2.0));
  CHECK(report.aggregate.at("argc_nr") == doctest::Approx(1.0));
}

TEST_CASE("saved outputs land in the requested directory") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir, 2);
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.height = opt.width = 16;
  opt.save_outputs_dir = (dir.path() / "outs").string();
  auto report = gated::evaluate(id, scan.train, opt);
  CHECK(report.n == 2);
  int pngs = 0;
  for (auto& e : std::filesystem::directory_iterator(opt.save_outputs_dir))
    pngs += e.path().extension() == ".png";
  CHECK(pngs == 2);
}

TEST_CASE("unknown in-house metric is a config error") {
  TempDir dir("mx");
  auto scan = tiny_paired_corpus(dir, 1);
  gated::IdentityEnhancer id;
  gated::EvalOptions opt;
  opt.metrics = {"psnr", "vibes"};
  CHECK_THROWS_AS(gated::evaluate(id, scan.train, opt), gated::ConfigError);
}
