#include <doctest.h>

#include "sdnet/pipeline/config.hpp"
#include "sdnet/pipeline/workdir.hpp"
#include "support/tmpdir.hpp"

using namespace sdnet;
using namespace sdnet::pipeline;

TEST_CASE("config defaults round-trip and hash deterministically") {
  RunConfig a;
  RunConfig b = RunConfig::from_json(a.to_json());
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.hash() == b.hash());

  b.cit_loss.lambda = 0.5;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("defaults match the documented pipeline settings") {
  RunConfig c;
  CHECK(c.plan.repeats == 5);
  CHECK(c.plan.folds == 5);
  CHECK(c.plan.val_fraction == 0.10);
  CHECK(c.preprocess.margin == 0.025);
  CHECK(c.preprocess.threshold == 0.5);
  CHECK(c.prepare.side == 224);
  CHECK(c.cit_loss.perceptual_weight == 0.006);
  CHECK(c.cit_loss.lambda == 0.1);
  CHECK(c.cit_schedule.batch_size == 16);
  CHECK(c.cit_schedule.max_epochs == 100);
  CHECK(c.cit_schedule.patience == 10);
  CHECK(c.clf.batch_size == 16);
  CHECK(c.clf.backbone == "resnet50");
  CHECK(c.clf.hidden_units == 512);
  CHECK(c.clf.momentum == 0.9);
  CHECK(c.variant == eval::Variant::SdNet);
}

TEST_CASE("environment overrides nest with double underscores") {
  util::json j = util::json::object();
  apply_env_overrides(j, {"SDNET_PLAN__SEED=42", "SDNET_VARIANT=\"cit_only\"",
                          "SDNET_CIT__LOSS__LAMBDA=0.25", "IGNORED=1",
                          "SDNET_EXCLUDE_NORMAL_PCR=true"});
  const auto config = RunConfig::from_json(j);
  CHECK(config.plan.seed == 42);
  CHECK(config.variant == eval::Variant::CitOnly);
  CHECK(config.cit_loss.lambda == 0.25);
  CHECK(config.exclude_normal_pcr);
}

TEST_CASE("env override accepts bare strings") {
  util::json j = util::json::object();
  apply_env_overrides(j, {"SDNET_VARIANT=with_seg"});
  CHECK(RunConfig::from_json(j).variant == eval::Variant::WithSeg);
}

TEST_CASE("workdir lock is exclusive and released") {
  testsupport::TmpDir tmp;
  const auto dir = tmp.path() / "work";
  {
    WorkDirLock lock(dir);
    CHECK(std::filesystem::exists(dir / ".sdnet.lock"));
    CHECK_THROWS_AS(WorkDirLock(dir), ConfigError);
  }
  CHECK(!std::filesystem::exists(dir / ".sdnet.lock"));
  WorkDirLock again(dir);  // re-acquirable after release
}

TEST_CASE("error records are machine readable") {
  testsupport::TmpDir tmp;
  write_error_record(tmp.path(), "crop", "sdnet::preprocess::DegenerateImage", "record 'x'");
  const auto j = util::read_json(tmp.path() / "error.json");
  CHECK(j.at("subcommand") == "crop");
  CHECK(j.at("type") == "sdnet::preprocess::DegenerateImage");
  CHECK(j.at("message") == "record 'x'");
}

TEST_CASE("experiment_config carries the resolved hash and variant") {
  RunConfig c;
  c.variant = eval::Variant::WithSeg;
  const auto ec = c.experiment_config();
  CHECK(ec.variant == eval::Variant::WithSeg);
  CHECK(ec.config_hash == c.hash());
  CHECK(ec.extra_meta.at("exclude_normal_pcr") == false);
}
