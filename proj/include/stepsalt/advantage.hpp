#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stepsalt/core_types.hpp"

namespace stepsalt {

enum class Estimator { GRPO, RLOO };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view text);  // throws ConfigError

/// Trajectory-level advantages for one group.
struct GroupAdvantages {
  std::vector<double> values;
  Estimator estimator = Estimator::GRPO;
  /// All rewards equal (GRPO: population std below the floor); values are 0.
  bool degenerate = false;
};

/// Population-std floor below which a GRPO group is treated as degenerate.
inline constexpr double kStdFloor = 1e-8;

/// Binary outcome reward: 1.0 on task completion, 0.0 otherwise.
constexpr double outcome_reward(bool task_complete) { return task_complete ? 1.0 : 0.0; }

/// (R_i - mean) / std with the population standard deviation. Requires at
/// least two finite rewards (EstimatorError otherwise).
GroupAdvantages grpo_advantages(std::span<const double> rewards);

/// Leave-one-out baseline: R_i - mean_{j != i} R_j.
GroupAdvantages rloo_advantages(std::span<const double> rewards);

GroupAdvantages estimate_advantages(Estimator estimator, std::span<const double> rewards);

/// Sets every step's advantage slot to `advantage` (throws
/// PreconditionError if it is not finite).
Trajectory broadcast(Trajectory traj, double advantage);

/// Estimates trajectory-level advantages from the group's rewards and
/// broadcasts them to every step: the pre-refinement baseline.
Group broadcast_group_advantages(const Group& group, Estimator estimator);

}  // namespace stepsalt
