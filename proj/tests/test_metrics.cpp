#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <limits>
#include <random>

#include "stepsalt/errors.hpp"
#include "stepsalt/metrics.hpp"
#include "test_support.hpp"

using namespace stepsalt;
using testing::make_trajectory;

namespace {

const Task kTask{"t", "p"};

Group with_rewards(const std::vector<double>& rewards) {
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < rewards.size(); ++i)
    trajs.push_back(make_trajectory(kTask, {{"a" + std::to_string(i), "o"}}, rewards[i], std::to_string(i)));
  return Group(kTask, trajs);
}

TrajGraph ops(std::size_t merges, std::size_t diverges) {
  TrajGraph g;
  g.merge_ops = merges;
  g.diverge_ops = diverges;
  return g;
}

}  // namespace

TEST_CASE("success rate examples") {
  CHECK(success_rate(std::vector{with_rewards({1, 1, 1})}) == 1.0);
  CHECK(success_rate(std::vector{with_rewards({1, 0, 1, 0})}) == 0.5);
  CHECK(success_rate(std::vector{with_rewards({1, 0, 0, 0}), with_rewards({1, 0, 0, 0})}) == 0.25);
  CHECK_THROWS_AS(success_rate(std::vector<Group>{}), PreconditionError);
}

TEST_CASE("success rate ignores group order") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Group> groups;
    for (std::size_t k = 1 + gen() % 5; k > 0; --k) groups.push_back(testing::random_group(gen));
    const double before = success_rate(groups);
    std::shuffle(groups.begin(), groups.end(), gen);
    CHECK(success_rate(groups) == before);
  }
}

TEST_CASE("aggregate merge rate examples") {
  CHECK(aggregate_merge_rate(std::vector{ops(4, 4), ops(0, 8)}) == 0.25);
  CHECK(aggregate_merge_rate(std::vector{ops(3, 5), ops(3, 5)}) == merge_rate(ops(3, 5)));
  CHECK(aggregate_merge_rate(std::vector{ops(0, 5), ops(0, 2)}) == 0.0);
  CHECK_THROWS_AS(aggregate_merge_rate(std::vector<TrajGraph>{}), PreconditionError);
  CHECK_THROWS_AS(aggregate_merge_rate(0, 0), PreconditionError);
}

TEST_CASE("aggregate merge rate stays in range and equals the single-graph rate") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Group g = testing::random_group(gen);
    const auto graph = build_graph(g, 1 + trial % 3, MatchConfig{});
    CHECK(aggregate_merge_rate(std::vector{graph}) == merge_rate(graph));
    const double r = aggregate_merge_rate(std::vector{graph, build_graph(testing::random_group(gen), 2, MatchConfig{})});
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("refinement delta examples") {
  const std::vector<std::vector<double>> a{{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}};
  const auto same = refinement_delta(a, a);
  CHECK(same.max_abs_change == 0.0);
  CHECK(same.changed_fraction == 0.0);
  auto b = a;
  b[1][2] += 1.0;
  const auto one = refinement_delta(a, b);
  CHECK(one.max_abs_change == 1.0);
  CHECK(one.changed_fraction == doctest::Approx(0.1));
  const auto conflict = refinement_delta({{1.0, 1.0}, {-1.0, -1.0}}, {{0.0, 1.0}, {0.0, -1.0}});
  CHECK(conflict.max_abs_change == 1.0);
  CHECK_THROWS_AS(refinement_delta(a, {{1}}), ConsistencyError);
  CHECK_THROWS_AS(refinement_delta({{1, 2}}, {{1}}), ConsistencyError);
}

TEST_CASE("metric records serialize to one JSON line") {
  MetricRecord r{"merge_rate", 3, 0.25, {{"arm", "salt"}}};
  CHECK(r.to_json() == R"({"name":"merge_rate","update":3,"value":0.25,"tags":{"arm":"salt"}})");
  r.value = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(r.to_json(), SerializationError);
}
