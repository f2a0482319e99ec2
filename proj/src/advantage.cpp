#include "stepsalt/advantage.hpp"

#include <cmath>
#include <string>

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

void check_rewards(std::span<const double> rewards) {
  if (rewards.size() < 2)
    throw EstimatorError("group-normalized advantages need at least 2 rewards, got " +
                         std::to_string(rewards.size()));
  for (double r : rewards)
    if (!std::isfinite(r)) throw EstimatorError("reward is not finite");
}

bool all_equal(std::span<const double> rewards) {
  for (double r : rewards)
    if (r != rewards.front()) return false;
  return true;
}

}  // namespace

std::string_view to_string(Estimator e) { return e == Estimator::GRPO ? "grpo" : "rloo"; }

Estimator parse_estimator(std::string_view text) {
  if (text == "grpo") return Estimator::GRPO;
  if (text == "rloo") return Estimator::RLOO;
  throw ConfigError("train.estimator: expected grpo|rloo, got '" + std::string(text) + "'");
}

GroupAdvantages grpo_advantages(std::span<const double> rewards) {
  check_rewards(rewards);
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);

  GroupAdvantages out;
  out.estimator = Estimator::GRPO;
  out.values.assign(rewards.size(), 0.0);
  if (std < kStdFloor) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) out.values[i] = (rewards[i] - mean) / std;
  return out;
}

GroupAdvantages rloo_advantages(std::span<const double> rewards) {
  check_rewards(rewards);
  const double n = static_cast<double>(rewards.size());
  double total = 0.0;
  for (double r : rewards) total += r;

  GroupAdvantages out;
  out.estimator = Estimator::RLOO;
  out.values.assign(rewards.size(), 0.0);
  if (all_equal(rewards)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i)
    out.values[i] = rewards[i] - (total - rewards[i]) / (n - 1.0);
  return out;
}

GroupAdvantages estimate_advantages(Estimator estimator, std::span<const double> rewards) {
  return estimator == Estimator::GRPO ? grpo_advantages(rewards) : rloo_advantages(rewards);
}

Trajectory broadcast(Trajectory traj, double advantage) {
  if (!std::isfinite(advantage)) throw PreconditionError("broadcast: advantage is not finite");
  traj.advantages = std::vector<double>(traj.steps.size(), advantage);
  return traj;
}

Group broadcast_group_advantages(const Group& group, Estimator estimator) {
  std::vector<double> rewards;
  rewards.reserve(group.size());
  for (const auto& t : group.trajectories()) rewards.push_back(t.reward);
  const GroupAdvantages adv = estimate_advantages(estimator, rewards);
  std::vector<std::vector<double>> per_traj;
  per_traj.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i)
    per_traj.emplace_back(group[i].steps.size(), adv.values[i]);
  return group.with_advantages(per_traj);
}

}  // namespace stepsalt
