#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "semcast/config.hpp"
#include "semcast/error.hpp"

using namespace semcast;

TEST_CASE("every key has a default and a description") {
  std::set<std::string> seen;
  for (const auto& k : config_keys()) {
    CHECK_FALSE(k.doc.empty());
    CHECK(seen.insert(std::string(k.key)).second);
  }
  CHECK_NOTHROW(to_experiment(ConfigStore{}));
}

TEST_CASE("defaults follow the published hyperparameter table") {
  const auto c = to_experiment(ConfigStore{});
  CHECK(c.batch == 64);
  CHECK(c.kappa == 100);
  CHECK(c.inner_steps == 5);
  CHECK(c.epochs == 71);
  CHECK(c.lr_decoder == 1e-3);
  CHECK(c.lr_inner == 1e-3);
  CHECK(c.lr_joint == 1e-3);
  CHECK(c.bits == 128);
  CHECK(c.latent == 128);
  CHECK(c.clip_eps == 0.2);
  CHECK(c.beta == 0.5);
  CHECK(c.receivers.size() == 2);
  CHECK(c.receivers[0].task == TaskKind::reconstruction);
  CHECK(c.receivers[1].task == TaskKind::classification);
  CHECK(std::isinf(c.snr_grid.back()));
}

TEST_CASE("sectioned key-value text") {
  ConfigStore s;
  s.merge_text(R"(
# comment
seed = 7   # trailing comment
[train]
batch = 32
aux = false
[receivers]
tasks = ["classification", "reconstruction", "classification"]
channels = "rayleigh"
snr_db = [0, 4, inf]
hidden = 0
[eval]
snr_grid = [-2, 10]
)");
  const auto c = to_experiment(s);
  CHECK(c.seed == 7);
  CHECK(c.batch == 32);
  CHECK_FALSE(c.aux);
  REQUIRE(c.receivers.size() == 3);
  CHECK(c.receivers[2].task == TaskKind::classification);
  CHECK(c.receivers[1].channel.kind == ChannelKind::rayleigh);
  CHECK(c.receivers[1].channel.snr_db == 4.0);
  CHECK(std::isinf(c.receivers[2].channel.snr_db));
  CHECK(c.snr_grid == std::vector<double>{-2.0, 10.0});
}

TEST_CASE("JSON and key-value forms agree") {
  ConfigStore a, b;
  a.merge_text("seed = 3\n[train]\nkappa = 20\nlr_joint = 0.01\n[eval]\nsnr_grid = [0, 4]\n");
  b.merge_text(R"({"seed": 3, "train": {"kappa": 20, "lr_joint": "0.01"}, "eval": {"snr_grid": [0, 4]}})");
  CHECK(a.entries() == b.entries());
}

TEST_CASE("unknown keys and bad values are rejected") {
  ConfigStore s;
  CHECK_THROWS_AS(s.merge_text("[train]\nbatchsize = 3\n"), ConfigError);
  CHECK_THROWS_AS(s.merge_text("{\"train\": {\"nope\": 1}}"), ConfigError);
  CHECK_THROWS_AS(s.apply_override("nope=1"), ConfigError);
  CHECK_THROWS_AS(s.apply_override("seed"), ConfigError);
  CHECK_THROWS_AS(s.merge_text("[train\n"), ConfigError);
  CHECK_THROWS_AS(s.merge_text("{ not json"), ConfigError);

  auto rejects = [](const char* assignment) {
    ConfigStore c;
    c.apply_override(assignment);
    CHECK_THROWS_AS(to_experiment(c), ConfigError);
  };
  rejects("train.batch=abc");
  rejects("train.batch=0");
  rejects("train.inner_steps=0");
  rejects("train.aux=maybe");
  rejects("train.class_reward=logit");
  rejects("train.policy_eval=mode");
  rejects("data.source=cifar");
  rejects("receivers.snr_db=1,2,3");
  rejects("receivers.tasks=segmentation");
  rejects("receivers.channels=ofdm");
  rejects("model.log_sigma_min=3");
}

TEST_CASE("overrides apply after the file and are logged") {
  ConfigStore s;
  s.merge_text("seed = 5\n");
  s.apply_override("seed=9");
  s.apply_override("train.kappa = 3");
  CHECK(s.get("seed") == "9");
  CHECK(s.get("train.kappa") == "3");
  REQUIRE(s.log().size() == 2);
  CHECK(s.log()[0] == "override seed: 5 -> 9");
}

TEST_CASE("the effective dump parses back to the same values") {
  ConfigStore s;
  s.apply_override("eval.snr_grid=-4,inf");
  s.apply_override("out=some dir/x");
  ConfigStore back;
  back.merge_text(s.dump());
  CHECK(back.entries() == s.entries());
}
