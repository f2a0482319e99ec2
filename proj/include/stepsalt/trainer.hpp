#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stepsalt/advantage.hpp"
#include "stepsalt/core_types.hpp"
#include "stepsalt/envs.hpp"
#include "stepsalt/matchers.hpp"
#include "stepsalt/policy.hpp"
#include "stepsalt/salt.hpp"

namespace stepsalt {

struct TrainConfig {
  Estimator estimator = Estimator::GRPO;
  bool use_salt = true;
  std::size_t group_size = 8;
  /// Window length of graph state keys.
  std::size_t history_len = 3;
  /// Window length of policy contexts; independent of history_len.
  std::size_t policy_window = 15;
  double clip_eps = 0.2;
  double kl_coeff = 0.01;
  double learning_rate = 0.1;
  double temperature = 1.0;
  double eval_temperature = 0.4;
  std::size_t updates = 300;
  std::size_t groups_per_update = 1;
  /// Evaluate every this many updates (0: final evaluation only).
  std::size_t eval_interval = 0;
  std::size_t eval_episodes = 64;
  /// Leave all-equal-reward groups out of the policy update (they still
  /// count towards metrics).
  bool skip_degenerate = false;
  std::vector<std::uint64_t> seeds = {0};
  EnvSpec env;
  MatchConfig match;

  void validate() const;  // throws ConfigError naming the offending key
};

/// How rollouts sample and how policy contexts are formed.
struct RolloutOptions {
  std::size_t policy_window = 15;
  MatchConfig match;
  double temperature = 1.0;
};

/// G rollouts of the task instance `episode_seed`, sampled with `rng`.
/// Each trajectory records the behavior probability of every taken action.
/// Rewards follow outcome_reward; truncation at the horizon is a failure.
Group rollout_group(const Policy& policy, const EnvSpec& env, std::size_t group_size, std::uint64_t episode_seed,
                    Rng& rng, const RolloutOptions& options);

/// Per-context gradient of the surrogate with respect to the logits.
using PolicyGradient = std::map<std::string, std::vector<double>>;

struct SurrogateConfig {
  double clip_eps = 0.2;
  double kl_coeff = 0.01;
  std::size_t policy_window = 15;
  MatchConfig match;
};

/// Sum over every step of every trajectory of
///   min(r * A, clip(r, 1 - eps, 1 + eps) * A) - kl_coeff * KL(pi(.|c) || ref(.|c))
/// with r = pi(a|c) / behavior_prob. `advantages[g]` pairs with `groups[g]`.
double surrogate_objective(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                           std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg);

/// Analytic gradient of surrogate_objective.
PolicyGradient surrogate_gradient(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                                  std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg);

double gradient_norm(const PolicyGradient& grad);

struct UpdateResult {
  Policy policy;
  double grad_norm = 0.0;
};

/// One gradient-ascent step of size `learning_rate` on the surrogate.
/// Throws PreconditionError when a trajectory lacks behavior probabilities.
UpdateResult surrogate_update(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                              std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg,
                              double learning_rate);

struct UpdateRecord {
  std::size_t update = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double merge_rate = 0.0;
  std::size_t conflict_count = 0;
  double grad_norm = 0.0;

  bool operator==(const UpdateRecord&) const = default;
};

struct EvalRecord {
  std::size_t update = 0;
  double success_rate = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::vector<UpdateRecord> updates;
  std::vector<EvalRecord> evaluations;
  double final_success_rate = 0.0;
  std::size_t eval_episodes = 0;

  bool operator==(const TrainReport&) const = default;
};

struct TrainRun {
  TrainReport report;
  Policy policy;
};

/// Runs the full loop for one seed: rollout, estimator, broadcast, graph
/// diagnostics, refinement when use_salt, surrogate update. Configuration
/// errors surface before the first rollout.
TrainRun train_run(const TrainConfig& cfg, std::uint64_t seed);
TrainReport train(const TrainConfig& cfg, std::uint64_t seed);

/// Success rate of `policy` over `episodes` fresh episodes at the
/// evaluation temperature.
double evaluate(const Policy& policy, const TrainConfig& cfg, std::uint64_t seed, std::size_t tag,
                std::size_t episodes);

/// Line-delimited report records: one per update, one per evaluation and a
/// closing summary line.
std::string report_to_ndjson(const TrainReport& report);
/// Header plus one row per update, for plotting.
std::string reports_to_csv(std::span<const TrainReport> reports);

}  // namespace stepsalt
