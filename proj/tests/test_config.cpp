#include <doctest.h>

#include <fstream>

#include "gated/config.hpp"
#include "gated/errors.hpp"
#include "testutil.hpp"

using nlohmann::json;
using testutil::TempDir;

namespace {

std::string write_json(const TempDir& dir, const std::string& body) {
  const auto path = dir.path() / "config.json";
  std::ofstream f(path);
  f << body;
  return path.string();
}

}  // namespace

TEST_CASE("defaults validate and carry the documented values") {
  auto cfg = gated::config_from_json(gated::default_config_json());
  CHECK(cfg.seed == 7);
  CHECK(cfg.data.layout == gated::Layout::lolv1);
  CHECK(cfg.data.size == 128);
  CHECK(cfg.data.extra.empty());
  CHECK(cfg.loss.alpha == doctest::Approx(0.5));
  CHECK(cfg.loss.beta == doctest::Approx(0.2));
  CHECK(cfg.loss.gamma_w == doctest::Approx(0.2));
  CHECK(cfg.loss.delta == doctest::Approx(0.1));
  CHECK(cfg.loss.stage1_weight == doctest::Approx(0.3));
  CHECK(cfg.loss.stage2_weight == doctest::Approx(0.7));
  CHECK(cfg.loss.ssim_mode == gated::SsimMode::windowed);
  CHECK(cfg.train.epochs == 100);
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.learning_rate == doctest::Approx(2e-4));
  CHECK(cfg.train.lr_schedule == gated::LrSchedule::cosine);
  CHECK(cfg.train.clip_norm == doctest::Approx(1.0));
  CHECK(cfg.train.eval_every == 1);
}

TEST_CASE("partial files merge over the defaults") {
  TempDir dir("cfg");
  const auto path = write_json(dir,
                               R"({"trainer": {"epochs": 3, "batch_size": 2},
                                   "dataset": {"root": "/data/pairs"}})");
  auto j = gated::load_config_file(path);
  auto cfg = gated::config_from_json(j);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.batch_size == 2);
  CHECK(cfg.data.root == "/data/pairs");
  CHECK(cfg.train.learning_rate == doctest::Approx(2e-4));  // untouched default
}

TEST_CASE("unknown keys are rejected with their full path") {
  TempDir dir("cfg");
  const auto path = write_json(dir, R"({"trainer": {"epochz": 3}})");
  try {
    gated::load_config_file(path);
    FAIL("expected ConfigError");
  } catch (const gated::ConfigError& e) {
    CHECK(std::string(e.what()).find("trainer.epochz") != std::string::npos);
  }

  const auto path2 = write_json(dir, R"({"speed": 1})");
  CHECK_THROWS_AS(gated::load_config_file(path2), gated::ConfigError);
}

TEST_CASE("broken json files are config errors") {
  TempDir dir("cfg");
  const auto path = write_json(dir, "{broken");
  CHECK_THROWS_AS(gated::load_config_file(path), gated::ConfigError);
  CHECK_THROWS_AS(gated::load_config_file((dir.path() / "absent.json").string()),
                  gated::ConfigError);
}

TEST_CASE("overrides parse values by json, falling back to strings") {
  json j = gated::default_config_json();
  gated::apply_override(j, "trainer.epochs=5");
  gated::apply_override(j, "dataset.layout=lolv2_real");  // unquoted string
  gated::apply_override(j, "dataset.augment_hflip=true");
  gated::apply_override(j, "loss.alpha=0.25");
  gated::apply_override(j, "dataset.root=/data/low light");  // spaces survive
  gated::apply_override(j, "seed=123");
  auto cfg = gated::config_from_json(j);
  CHECK(cfg.train.epochs == 5);
  CHECK(cfg.data.layout == gated::Layout::lolv2_real);
  CHECK(cfg.data.augment_hflip);
  CHECK(cfg.loss.alpha == doctest::Approx(0.25));
  CHECK(cfg.data.root == "/data/low light");
  CHECK(cfg.seed == 123);
}

TEST_CASE("override edge cases fail loudly") {
  json j = gated::default_config_json();
  CHECK_THROWS_AS(gated::apply_override(j, "trainer.nope=1"), gated::ConfigError);
  CHECK_THROWS_AS(gated::apply_override(j, "trainer=3"), gated::ConfigError);
  CHECK_THROWS_AS(gated::apply_override(j, "no_equals_here"), gated::ConfigError);
  CHECK_THROWS_AS(gated::apply_override(j, "=5"), gated::ConfigError);
  CHECK_THROWS_AS(gated::apply_override(j, "seed.x=1"), gated::ConfigError);

  // type errors surface at validation time
  gated::apply_override(j, "trainer.epochs=fast");
  CHECK_THROWS_AS(gated::config_from_json(j), gated::ConfigError);
}

TEST_CASE("extra corpora parse into source specs") {
  json j = gated::default_config_json();
  gated::apply_override(
      j, R"(dataset.extra=[{"layout":"lolv2_real","root":"/a"},{"layout":"lolv2_syn","root":"/b"}])");
  auto cfg = gated::config_from_json(j);
  REQUIRE(cfg.data.extra.size() == 2);
  CHECK(cfg.data.extra[0].layout == gated::Layout::lolv2_real);
  CHECK(cfg.data.extra[0].root == "/a");
  CHECK(cfg.data.extra[1].layout == gated::Layout::lolv2_syn);
}

TEST_CASE("range validation rejects nonsense") {
  auto with = [](const std::string& ov) {
    json j = gated::default_config_json();
    gated::apply_override(j, ov);
    return j;
  };
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.epochs=0")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.batch_size=0")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.learning_rate=0")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.min_learning_rate=-1e-9")),
                  gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.eval_every=0")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("dataset.size=20")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("dataset.size=0")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("dataset.layout=lol_v9")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("loss.ssim_mode=fancy")), gated::ConfigError);
  CHECK_THROWS_AS(gated::config_from_json(with("trainer.lr_schedule=linear")),
                  gated::ConfigError);
}

TEST_CASE("typed config survives the json round trip") {
  json j = gated::default_config_json();
  gated::apply_override(j, "trainer.epochs=17");
  gated::apply_override(j, "loss.ssim_mode=global");
  gated::apply_override(j, "trainer.lr_schedule=constant");
  gated::apply_override(j, "dataset.size=64");
  auto cfg = gated::config_from_json(j);

  auto cfg2 = gated::config_from_json(gated::config_to_json(cfg));
  CHECK(cfg2.train.epochs == 17);
  CHECK(cfg2.loss.ssim_mode == gated::SsimMode::global);
  CHECK(cfg2.train.lr_schedule == gated::LrSchedule::constant);
  CHECK(cfg2.data.size == 64);
  CHECK(cfg2.loss.beta == doctest::Approx(cfg.loss.beta));
  CHECK(cfg2.train.learning_rate == doctest::Approx(cfg.train.learning_rate));
}

TEST_CASE("make_config composes file and overrides") {
  TempDir dir("cfg");
  const auto path = write_json(dir, R"({"trainer": {"epochs": 9}})");
  auto cfg = gated::make_config(path, {"trainer.epochs=2", "dataset.size=32"});
  CHECK(cfg.train.epochs == 2);  // override beats file
  CHECK(cfg.data.size == 32);

  auto cfg2 = gated::make_config("", {});
  CHECK(cfg2.train.epochs == 100);
}
