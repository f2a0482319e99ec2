#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "oracle.hpp"
#include "stepsalt/envs.hpp"
#include "stepsalt/errors.hpp"

using namespace stepsalt;

namespace {

EnvSpec chain(std::size_t length, std::size_t branching, std::size_t horizon) {
  EnvSpec s;
  s.kind = EnvKind::Chain;
  s.chain_length = length;
  s.branching = branching;
  s.horizon = horizon;
  return s;
}

EnvSpec distractor(std::size_t horizon = 15) {
  EnvSpec s;
  s.kind = EnvKind::Distractor;
  s.horizon = horizon;
  return s;
}

struct Played {
  std::vector<std::string> observations;
  bool done = false;
  bool success = false;
};

Played play(const EnvSpec& spec, std::uint64_t episode_seed, const std::vector<std::string>& actions,
            std::uint32_t rollout = 0) {
  Played p;
  EnvState s = reset(spec, episode_seed, rollout).first;
  for (const auto& a : actions) {
    if (s.done) break;
    auto r = step(s, a);
    p.observations.push_back(r.observation);
    s = r.state;
  }
  p.done = s.done;
  p.success = s.success;
  return p;
}

// Finds the winning lever sequence of a chain by trying each lever per stage.
std::vector<std::string> solve_chain(const EnvSpec& spec) {
  std::vector<std::string> plan;
  EnvState s = reset(spec, 0).first;
  const auto vocab = action_vocabulary(spec);
  for (std::size_t stage = 0; stage < spec.chain_length; ++stage) {
    for (const auto& a : vocab) {
      auto r = step(s, a);
      if (r.state.stage > s.stage) {
        plan.push_back(a);
        s = r.state;
        break;
      }
    }
  }
  return plan;
}

}  // namespace

TEST_CASE("reset is deterministic and names the goal") {
  const auto spec = chain(5, 2, 15);
  const auto [s1, t1] = reset(spec, 4);
  const auto [s2, t2] = reset(spec, 4);
  CHECK(s1.observation == s2.observation);
  CHECK(t1 == t2);
  CHECK(t1.prompt.find("Open 5 doors") != std::string::npos);

  const auto [d, dt] = reset(distractor(), 0);
  for (const char* a : {"take map", "open gate", "light torch"}) CHECK(dt.prompt.find(a) != std::string::npos);
  CHECK(d.observation == dt.prompt);
}

TEST_CASE("chain: correct levers succeed after length steps, a wrong lever is absorbing") {
  const auto spec = chain(5, 2, 15);
  const auto plan = solve_chain(spec);
  REQUIRE(plan.size() == 5);
  const auto win = play(spec, 0, plan);
  CHECK(win.success);
  CHECK(win.done);
  CHECK(win.observations.size() == 5);

  auto wrong = plan;
  wrong[2] = wrong[2] == "pull lever 1" ? "pull lever 2" : "pull lever 1";
  std::vector<std::string> long_plan = wrong;
  while (long_plan.size() < 20) long_plan.push_back(plan[0]);
  const auto lose = play(spec, 0, long_plan);
  CHECK_FALSE(lose.success);
  CHECK(lose.done);
  CHECK(lose.observations.size() == 15);
  CHECK(lose.observations.back() == "You are stuck. Nothing happens.");
}

TEST_CASE("unknown actions are in-band no-ops") {
  const auto r = play(chain(3, 2, 5), 0, {"dance"});
  CHECK(r.observations[0] == "Invalid action.");
  CHECK_FALSE(r.done);
  EnvSpec kd;
  kd.kind = EnvKind::KeyDoor;
  CHECK(play(kd, 0, {"fly"}).observations[0].rfind("Invalid action.", 0) == 0);
}

TEST_CASE("distractor: the wrong branch fails regardless of prefix") {
  const auto spec = distractor();
  const std::vector<std::string> prefix{"take map", "open gate", "light torch"};
  const auto left = [&] {
    auto p = prefix;
    p.push_back("go left");
    return play(spec, 0, p);
  }();
  const auto right = [&] {
    auto p = prefix;
    p.push_back("go right");
    return play(spec, 0, p);
  }();
  CHECK(left.done);
  CHECK(right.done);
  CHECK(left.success != right.success);
  const std::string losing = left.success ? "go right" : "go left";
  // Padding the prefix with no-ops does not rescue the losing branch.
  const auto padded = play(spec, 0, {"wait", "take map", "look around", "open gate", "light torch", "wait", losing});
  CHECK(padded.done);
  CHECK_FALSE(padded.success);
  CHECK(play(spec, 0, {"go left"}).observations[0] == "You can't do that yet.");
  CHECK(play(spec, 0, {"open gate"}).observations[0] == "You can't do that now.");
}

TEST_CASE("action vocabularies") {
  CHECK(action_vocabulary(chain(5, 2, 15)) == std::vector<std::string>{"pull lever 1", "pull lever 2"});
  EnvSpec kd;
  kd.kind = EnvKind::KeyDoor;
  CHECK(action_vocabulary(kd) == std::vector<std::string>{"up", "down", "left", "right", "pick", "open"});
  const auto d = distractor();
  CHECK(action_vocabulary(d) == action_vocabulary(d));
  CHECK(action_vocabulary(d).size() == 8);
  for (EnvKind k : {EnvKind::Chain, EnvKind::Distractor, EnvKind::KeyDoor}) {
    EnvSpec s;
    s.kind = k;
    CHECK(action_vocabulary(s).size() <= kMaxVocabulary);
  }
}

TEST_CASE("episodes are a pure function of env settings, seed and actions") {
  for (EnvKind k : {EnvKind::Chain, EnvKind::Distractor, EnvKind::KeyDoor}) {
    EnvSpec s;
    s.kind = k;
    s.distractor_noise = 0.5;
    s.task_variants = 4;
    const auto vocab = action_vocabulary(s);
    std::vector<std::string> acts;
    for (std::size_t i = 0; i < 15; ++i) acts.push_back(vocab[(i * 5 + 3) % vocab.size()]);
    for (std::uint64_t seed : {0u, 1u, 9u}) {
      const auto a = play(s, seed, acts, 2);
      const auto b = play(s, seed, acts, 2);
      CHECK(a.observations == b.observations);
      CHECK(a.success == b.success);
    }
  }
}

TEST_CASE("rewards are terminal and success implies done") {
  EnvSpec kd;
  kd.kind = EnvKind::KeyDoor;
  kd.horizon = 30;
  const auto vocab = action_vocabulary(kd);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EnvState s = reset(kd, seed).first;
    for (std::size_t i = 0; !s.done; ++i) {
      auto r = step(s, vocab[(seed * 7 + i * 3) % vocab.size()]);
      if (r.success) CHECK(r.done);
      s = r.state;
    }
    CHECK_THROWS_AS(step(s, "up"), PreconditionError);
  }
}

TEST_CASE("keydoor walks to the key and the door") {
  EnvSpec kd;
  kd.kind = EnvKind::KeyDoor;
  kd.key_x = 1;
  kd.key_y = 0;
  kd.door_x = 1;
  kd.door_y = 1;
  const auto r = play(kd, 0, {"right", "pick", "down", "open"});
  CHECK(r.success);
  CHECK(r.observations[1].find("You pick up the key.") != std::string::npos);
  CHECK(play(kd, 0, {"right", "down", "open"}).observations[2].rfind("The door is locked.", 0) == 0);
}

TEST_CASE("tagged rollouts make observations distinct across rollouts") {
  auto spec = distractor();
  spec.tag_rollouts = true;
  const auto a = play(spec, 0, {"wait", "wait"}, 0);
  const auto b = play(spec, 0, {"wait", "wait"}, 1);
  CHECK(a.observations[0] != b.observations[0]);
  CHECK(a.observations[0].find("[r0:t1]") != std::string::npos);
}

TEST_CASE("task variants change the instance, not the rollout index") {
  auto spec = distractor();
  spec.task_variants = 8;
  std::set<std::string> ids;
  for (std::uint64_t seed = 0; seed < 64; ++seed) ids.insert(reset(spec, seed).second.id);
  CHECK(ids.size() > 1);
  CHECK(reset(spec, 5, 0).second == reset(spec, 5, 3).second);
}

TEST_CASE("env validation names the key") {
  auto bad = [](EnvSpec s, const std::string& key) {
    try {
      s.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what()).find("env." + key) != std::string::npos;
    }
    return false;
  };
  EnvSpec s;
  s.horizon = 0;
  CHECK(bad(s, "horizon"));
  s = EnvSpec{};
  s.horizon = 51;
  CHECK(bad(s, "horizon"));
  s = chain(3, 1, 5);
  CHECK(bad(s, "branching"));
  s = distractor();
  s.distractors = 12;
  CHECK(bad(s, "distractors"));
  s = EnvSpec{};
  s.kind = EnvKind::KeyDoor;
  s.grid_size = 1;
  CHECK(bad(s, "grid_size"));
  CHECK_THROWS_AS(parse_env_kind("maze"), ConfigError);
  CHECK(parse_env_kind("keydoor") == EnvKind::KeyDoor);
}

TEST_CASE("exhaustive check: chain(branching 2, length 3) has one winning sequence in eight") {
  const auto r = oracle::exhaustive_env_check(chain(3, 2, 3));
  REQUIRE_FALSE(r.skipped);
  CHECK(r.sequences == 8);
  CHECK(r.successes == 1);
}

TEST_CASE("exhaustive check: distractor has a shared-prefix witness with opposite outcomes") {
  const auto r = oracle::exhaustive_env_check(distractor(5));
  REQUIRE_FALSE(r.skipped);
  REQUIRE(r.witness.has_value());
  const auto& [win, loss] = *r.witness;
  CHECK(std::equal(win.begin(), win.begin() + 3, loss.begin()));
  auto spec = distractor(5);
  CHECK(play(spec, 0, win).success);
  CHECK_FALSE(play(spec, 0, loss).success);
}

TEST_CASE("exhaustive check: unreachable key yields zero successes") {
  EnvSpec kd;
  kd.kind = EnvKind::KeyDoor;
  kd.horizon = 6;
  kd.blocked_column = 2;
  kd.key_x = 3;
  kd.key_y = 0;
  kd.door_x = 1;
  kd.door_y = 1;
  const auto r = oracle::exhaustive_env_check(kd);
  REQUIRE_FALSE(r.skipped);
  CHECK(r.sequences == 46656);
  CHECK(r.successes == 0);
}

TEST_CASE("exhaustive check skips oversized specs") {
  const auto r = oracle::exhaustive_env_check(distractor(15));
  CHECK(r.skipped);
  CHECK_FALSE(r.notice.empty());
}
