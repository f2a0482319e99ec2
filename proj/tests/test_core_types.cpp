#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "stepsalt/trajectory_log.hpp"
#include "test_support.hpp"

using namespace stepsalt;

namespace {

const char* kTwoSteps =
    R"({"task_id":"t1","group_id":"g1","traj_id":"a","reward":1.0,)"
    R"("steps":[{"action":"go to fridge 1","observation":"The fridge is closed."},)"
    R"({"action":"open fridge 1","observation":""}]})";

}  // namespace

TEST_CASE("parse a two-step record") {
  const Trajectory t = parse_trajectory_record(kTwoSteps);
  CHECK(t.size() == 2);
  CHECK(t.reward == 1.0);
  CHECK(t.task.id == "t1");
  CHECK(t.task.prompt == "t1");
  CHECK(t.group_id == "g1");
  CHECK(t.traj_id == "a");
  CHECK(t.steps[0].action == "go to fridge 1");
  CHECK(t.steps[1].observation.empty());
  CHECK_FALSE(t.has_advantages());
}

TEST_CASE("zero steps is a schema error") {
  CHECK_THROWS_AS(parse_trajectory_record(R"({"task_id":"t","group_id":"g","traj_id":"0","reward":0,"steps":[]})"),
                  SchemaError);
}

TEST_CASE("advantages length must match steps") {
  const char* rec =
      R"({"task_id":"t","group_id":"g","traj_id":"0","reward":0,"steps":[{"action":"a","observation":"x"},)"
      R"({"action":"b","observation":"y"},{"action":"c","observation":"z"}],"advantages":[1,2]})";
  CHECK_THROWS_AS(parse_trajectory_record(rec), SchemaError);
}

TEST_CASE("malformed records name the offending field") {
  auto message = [](const char* line) {
    try {
      parse_trajectory_record(line);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("<no error>");
  };
  CHECK(message(R"({"group_id":"g","traj_id":"0","reward":0,"steps":[]})").find("task_id") != std::string::npos);
  CHECK(message(R"({"task_id":"t","group_id":"g","traj_id":"0","reward":"x","steps":[]})").find("reward") !=
        std::string::npos);
  CHECK(message(R"({"task_id":"t","group_id":"g","traj_id":"0","reward":0,"steps":[{"observation":"o"}]})")
            .find("steps[0].action") != std::string::npos);
  CHECK(message("not json").find("invalid JSON") != std::string::npos);
}

TEST_CASE("unknown fields are ignored and field order is irrelevant") {
  const char* rec =
      R"({"steps":[{"observation":"o","action":"a","extra":1}],"reward":0.5,"traj_id":"7","zzz":[1,2],)"
      R"("group_id":"g","task_id":"t"})";
  const Trajectory t = parse_trajectory_record(rec);
  CHECK(t.reward == 0.5);
  CHECK(t.steps[0].action == "a");
}

TEST_CASE("write rejects non-finite values") {
  Trajectory t = parse_trajectory_record(kTwoSteps);
  t.reward = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(write_trajectory_record(t), SerializationError);
  t.reward = 0.0;
  t.advantages = std::vector<double>{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(write_trajectory_record(t), SerializationError);
}

TEST_CASE("set advantages appear in the record") {
  Trajectory t = parse_trajectory_record(kTwoSteps);
  t.advantages = std::vector<double>{0.25, -0.5};
  const std::string line = write_trajectory_record(t);
  CHECK(line.find("\"advantages\":[0.25,-0.5]") != std::string::npos);
  CHECK(parse_trajectory_record(line) == t);
}

TEST_CASE("round trip: parse(write(t)) == t for random trajectories") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    Group g = testing::random_group(gen);
    if (trial % 2) g = testing::with_random_advantages(gen, g);
    for (auto t : g.trajectories()) {
      t.task.prompt = trial % 3 ? t.task.id : "Prompt with \"quotes\" and unicode \xC3\xA9";
      t.reward = testing::uniform_real(gen) * 1e3 - 500.0;
      if (trial % 5 == 0) t.behavior_probs.assign(t.steps.size(), 1.0 / 3.0);
      REQUIRE(parse_trajectory_record(write_trajectory_record(t)) == t);
    }
  }
}

TEST_CASE("a group serializes to G records sharing one task id") {
  std::mt19937_64 gen(3);
  const Group g = testing::random_group(gen);
  const auto lines = write_group_records(g);
  REQUIRE(lines.size() == g.size());
  for (const auto& line : lines) CHECK(parse_trajectory_record(line).task.id == g.task().id);
}

TEST_CASE("group rejects mixed tasks") {
  const Task a{"a", "p"}, b{"b", "p"};
  CHECK_THROWS_AS(Group(a, {testing::make_trajectory(a, {{"x", "y"}}), testing::make_trajectory(b, {{"x", "y"}})}),
                  SchemaError);
  CHECK_THROWS_AS(Group(a, {}), SchemaError);
}

TEST_CASE("read_log reports the failing line and group_records checks completeness") {
  std::ostringstream log;
  log << kTwoSteps << "\n\n" << kTwoSteps << "\n";
  {
    std::istringstream in(log.str());
    const auto records = read_log(in);
    REQUIRE(records.size() == 2);
    CHECK(records[1].line == 3);
    const auto groups = group_records(records);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].group.size() == 2);
    try {
      group_records(records, 3);
      FAIL("expected incomplete-group error");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("g1") != std::string::npos);
    }
  }
  std::istringstream bad(std::string(kTwoSteps) + "\n{oops\n");
  try {
    read_log(bad);
    FAIL("expected a line error");
  } catch (const LogLineError& e) {
    CHECK(e.line() == 2);
  }
}
