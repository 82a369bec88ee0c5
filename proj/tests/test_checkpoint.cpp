#include <doctest.h>

#include <cstdint>
#include <fstream>

#include "gated/agcm.hpp"
#include "gated/checkpoint.hpp"
#include "gated/errors.hpp"
#include "gated/rng.hpp"
#include "testutil.hpp"

using testutil::TempDir;

namespace {

// Small hand-built state: two trainable tensors and one buffer.
struct ToyState {
  gated::Tensor w{2, 3, 3, 3}, b{1, 2, 1, 1}, running{1, 2, 1, 1};
  gated::Tensor gw{2, 3, 3, 3}, gb{1, 2, 1, 1};

  explicit ToyState(uint64_t seed) {
    gated::Rng rng(seed);
    for (auto& v : w.vec()) v = static_cast<float>(rng.normal());
    for (auto& v : b.vec()) v = static_cast<float>(rng.normal());
    for (auto& v : running.vec()) v = static_cast<float>(rng.uniform());
  }

  gated::ParamList params() {
    return {{"toy.w", &w, &gw, true},
            {"toy.b", &b, &gb, true},
            {"toy.running", &running, nullptr, false}};
  }
};

void corrupt_byte(const std::string& path, long offset_from_start) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(offset_from_start);
  char c = 0;
  f.read(&c, 1);
  c ^= 0x5a;
  f.seekp(offset_from_start);
  f.write(&c, 1);
}

void truncate_by(const std::string& path, size_t bytes) {
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - bytes);
}

}  // namespace

TEST_CASE("round trip preserves values, meta, and optimizer tensors") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();

  ToyState src(1);
  gated::CheckpointMeta meta;
  meta.epoch = 3;
  meta.step = 77;
  meta.config_json = "{\"seed\":7}";
  gated::NamedTensors opt;
  opt.emplace_back("toy.w.m", testutil::random_tensor<float>(2, 3, 3, 3, 50));
  opt.emplace_back("toy.w.v", testutil::random_tensor<float>(2, 3, 3, 3, 51, 0.f, 1.f));
  gated::save_checkpoint(path, src.params(), meta, opt);

  ToyState dst(2);  // different values before loading
  gated::NamedTensors opt_back;
  auto got = gated::load_checkpoint(path, dst.params(), &opt_back);
  CHECK(got.epoch == 3);
  CHECK(got.step == 77);
  CHECK(got.config_json == "{\"seed\":7}");
  size_t diff = 0;
  for (size_t i = 0; i < src.w.numel(); ++i) diff += src.w[i] != dst.w[i];
  for (size_t i = 0; i < src.b.numel(); ++i) diff += src.b[i] != dst.b[i];
  for (size_t i = 0; i < src.running.numel(); ++i) diff += src.running[i] != dst.running[i];
  CHECK(diff == 0);
  REQUIRE(opt_back.size() == 2);
  CHECK(opt_back[0].first == "toy.w.m");
  CHECK(opt_back[1].first == "toy.w.v");
  size_t odiff = 0;
  for (size_t i = 0; i < opt[0].second.numel(); ++i)
    odiff += opt[0].second[i] != opt_back[0].second[i];
  CHECK(odiff == 0);
}

TEST_CASE("peek reads meta without a model") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {5, 123, "{}"});
  auto meta = gated::peek_checkpoint(path);
  CHECK(meta.epoch == 5);
  CHECK(meta.step == 123);
}

TEST_CASE("missing file raises an io error") {
  CHECK_THROWS_AS(gated::peek_checkpoint("/nonexistent/nope.ckpt"), gated::IoError);
}

TEST_CASE("bad magic and bad version are version errors") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {});
  corrupt_byte(path, 0);  // magic
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::VersionMismatch);

  gated::save_checkpoint(path, src.params(), {});
  corrupt_byte(path, 8);  // version field
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::VersionMismatch);
}

TEST_CASE("corruption and truncation are checksum errors") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {});
  const auto size = std::filesystem::file_size(path);

  corrupt_byte(path, static_cast<long>(size) - 10);  // payload bit flip
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::ChecksumMismatch);

  gated::save_checkpoint(path, src.params(), {});
  truncate_by(path, 5);
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::ChecksumMismatch);

  gated::save_checkpoint(path, src.params(), {});
  truncate_by(path, size - 12);  // only magic+version left
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::ChecksumMismatch);
}

TEST_CASE("manifest corruption cannot slip past the checksum") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {});
  corrupt_byte(path, 30);  // inside the manifest JSON
  CHECK_THROWS_AS(gated::peek_checkpoint(path), gated::ChecksumMismatch);
}

TEST_CASE("name and shape mismatches list every offender") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "toy.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {});

  // same names, one wrong shape
  ToyState wrong(3);
  gated::Tensor odd(2, 3, 5, 5);
  gated::ParamList bad{{"toy.w", &odd, nullptr, true},
                       {"toy.b", &wrong.b, nullptr, true},
                       {"toy.running", &wrong.running, nullptr, false}};
  try {
    gated::load_checkpoint(path, bad);
    FAIL("expected ShapeError");
  } catch (const gated::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("toy.w") != std::string::npos);
    CHECK(msg.find("toy.b") == std::string::npos);  // healthy tensors not listed
  }

  // renamed tensor: reported both as unknown and as missing
  gated::ParamList renamed{{"toy.w2", &wrong.w, nullptr, true},
                           {"toy.b", &wrong.b, nullptr, true},
                           {"toy.running", &wrong.running, nullptr, false}};
  try {
    gated::load_checkpoint(path, renamed);
    FAIL("expected ShapeError");
  } catch (const gated::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("toy.w:") != std::string::npos);
    CHECK(msg.find("toy.w2") != std::string::npos);
  }
}

TEST_CASE("parent directories are created on save") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "a/b/c/deep.ckpt").string();
  ToyState src(1);
  gated::save_checkpoint(path, src.params(), {});
  CHECK(std::filesystem::exists(path));
}

TEST_CASE("a full stage-one model survives the round trip bit for bit") {
  TempDir dir("ck");
  const std::string path = (dir.path() / "agcm.ckpt").string();

  gated::Rng r1(11), r2(22);
  gated::Agcm a(r1), b(r2);
  gated::ParamListT<float> sa, sb;
  a.collect_state("stage1", sa);
  b.collect_state("stage1", sb);

  gated::save_checkpoint(path, sa, {9, 900, "{}"});
  auto meta = gated::load_checkpoint(path, sb);
  CHECK(meta.epoch == 9);

  // identical weights now give identical outputs
  a.set_train(false);
  b.set_train(false);
  gated::Tensor x = testutil::random_tensor<float>(1, 3, 16, 16, 123, 0.05f, 0.9f);
  auto ya = a.forward(x);
  auto yb = b.forward(x);
  size_t mismatch = 0;
  for (size_t i = 0; i < ya.image.numel(); ++i) mismatch += ya.image[i] != yb.image[i];
  for (size_t i = 0; i < ya.gamma.numel(); ++i) mismatch += ya.gamma[i] != yb.gamma[i];
  CHECK(mismatch == 0);
}
