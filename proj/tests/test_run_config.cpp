#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stepsalt/errors.hpp"
#include "stepsalt/run_config.hpp"

using namespace stepsalt;

namespace {

std::string error_of(const RunConfig& rc) {
  try {
    rc.to_train_config();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("parse sections, comments and values") {
  const auto rc = RunConfig::parse(
      "# run\n"
      "[train]\n"
      "group_size = 4\n"
      "seeds = 1, 2,3\n"
      "; comment\n"
      "\n"
      "[env]\n"
      "kind = chain\n"
      "chain_length=4\n"
      "[match]\n"
      "mode = embed\n"
      "cosine_threshold = 0.85\n");
  CHECK(rc.values.at("train.group_size") == "4");
  const auto cfg = rc.to_train_config();
  CHECK(cfg.group_size == 4);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.env.kind == EnvKind::Chain);
  CHECK(cfg.env.chain_length == 4);
  CHECK(cfg.match.mode == MatchMode::Embed);
  CHECK(cfg.match.cosine_threshold == 0.85);
}

TEST_CASE("overrides") {
  auto rc = RunConfig::parse("[env]\nkind = distractor\n");
  rc.set_override("--train.history_len=5");
  rc.set_override("train.use_salt=false");
  const auto cfg = rc.to_train_config();
  CHECK(cfg.history_len == 5);
  CHECK_FALSE(cfg.use_salt);
  CHECK_THROWS_AS(rc.set_override("--history_len"), ConfigError);
}

TEST_CASE("errors name the key") {
  CHECK(error_of(RunConfig::parse("[train]\ngroup_size = 4\n")).find("env.kind") != std::string::npos);
  CHECK(error_of(RunConfig::parse("[env]\nkind = chain\n[train]\ngroup_size = many\n")).find("train.group_size") !=
        std::string::npos);
  CHECK(error_of(RunConfig::parse("[env]\nkind = chain\n[train]\nbogus = 1\n")).find("train.bogus") !=
        std::string::npos);
  CHECK(error_of(RunConfig::parse("[env]\nkind = chain\n[train]\nclip_eps = 2\n")).find("train.clip_eps") !=
        std::string::npos);
  CHECK(error_of(RunConfig::parse("[env]\nkind = maze\n")).find("env.kind") != std::string::npos);
  CHECK_THROWS_AS(RunConfig::parse("[train\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("render round trips") {
  TrainConfig cfg;
  cfg.env.kind = EnvKind::KeyDoor;
  cfg.env.blocked_column = 2;
  cfg.seeds = {4, 9};
  cfg.match = MatchConfig::embed(0.9);
  cfg.learning_rate = 0.123456789;
  const std::string text = RunConfig::render(cfg);
  const auto back = RunConfig::parse(text).to_train_config();
  CHECK(RunConfig::render(back) == text);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.learning_rate == cfg.learning_rate);
}
