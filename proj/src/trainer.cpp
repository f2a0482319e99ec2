#include "stepsalt/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>

#include "stepsalt/errors.hpp"
#include "stepsalt/metrics.hpp"
#include "stepsalt/traj_graph.hpp"

namespace stepsalt {
namespace {

void require(bool ok, const char* key, const char* why) {
  if (!ok) throw ConfigError(std::string(key) + ": " + why);
}

void check_batch(std::span<const Group> groups, std::span<const RefinedAdvantages> advantages) {
  if (groups.size() != advantages.size()) throw ConsistencyError("surrogate: one advantage table per group");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (advantages[g].per_traj.size() != group.size())
      throw ConsistencyError("surrogate: advantage table does not match group size");
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (advantages[g].per_traj[i].size() != group[i].steps.size())
        throw ConsistencyError("surrogate: advantage array does not match trajectory length");
      if (group[i].behavior_probs.size() != group[i].steps.size())
        throw PreconditionError("surrogate: trajectory " + std::to_string(i) + " has no behavior probabilities");
    }
  }
}

// Calls fn(context, action_index, advantage, behavior_prob) for every step.
template <typename Fn>
void for_each_step(const Policy& policy, std::span<const Group> groups, std::span<const RefinedAdvantages> advantages,
                   const SurrogateConfig& cfg, Fn&& fn) {
  check_batch(groups, advantages);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = 0; i < groups[g].size(); ++i) {
      const Trajectory& traj = groups[g][i];
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const std::string ctx = policy_context(traj.task, traj.steps, t, cfg.policy_window, cfg.match);
        fn(ctx, policy.action_index(traj.steps[t].action), advantages[g].per_traj[i][t], traj.behavior_probs[t]);
      }
    }
  }
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void TrainConfig::validate() const {
  require(group_size >= 2, "train.group_size", "must be >= 2");
  require(history_len >= 1, "train.history_len", "must be >= 1");
  require(policy_window >= 1, "train.policy_window", "must be >= 1");
  require(clip_eps > 0.0 && clip_eps < 1.0, "train.clip_eps", "must lie in (0, 1)");
  require(kl_coeff >= 0.0 && std::isfinite(kl_coeff), "train.kl_coeff", "must be >= 0");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "train.learning_rate", "must be positive");
  require(temperature > 0.0 && std::isfinite(temperature), "train.temperature", "must be positive");
  require(eval_temperature > 0.0 && std::isfinite(eval_temperature), "train.eval_temperature", "must be positive");
  require(updates >= 1, "train.updates", "must be >= 1");
  require(groups_per_update >= 1, "train.groups_per_update", "must be >= 1");
  require(eval_episodes >= 1, "train.eval_episodes", "must be >= 1");
  require(!seeds.empty(), "train.seeds", "must list at least one seed");
  env.validate();
  match.validate();
}

Group rollout_group(const Policy& policy, const EnvSpec& env, std::size_t group_size, std::uint64_t episode_seed,
                    Rng& rng, const RolloutOptions& options) {
  if (group_size < 1) throw PreconditionError("rollout_group: group_size must be >= 1");
  const auto& actions = policy.actions();
  std::vector<Trajectory> trajs;
  trajs.reserve(group_size);
  Task task;
  for (std::size_t i = 0; i < group_size; ++i) {
    auto [state, t0] = reset(env, episode_seed, static_cast<std::uint32_t>(i));
    task = t0;
    Trajectory traj;
    traj.task = task;
    traj.group_id = task.id + "@" + std::to_string(episode_seed);
    traj.traj_id = std::to_string(i);
    while (!state.done) {
      const std::string ctx =
          policy_context(task, traj.steps, traj.steps.size(), options.policy_window, options.match);
      const auto probs = policy.probabilities(ctx, options.temperature);
      const std::size_t k = Policy::sample_index(probs, rng);
      StepResult res = step(state, actions[k]);
      traj.steps.push_back({actions[k], res.observation});
      traj.behavior_probs.push_back(probs[k]);
      state = std::move(res.state);
    }
    traj.reward = outcome_reward(state.success);
    trajs.push_back(std::move(traj));
  }
  return Group(task, std::move(trajs));
}

double surrogate_objective(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                           std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg) {
  double total = 0.0;
  for_each_step(policy, groups, advantages, cfg, [&](const std::string& ctx, std::size_t a, double adv, double b) {
    const auto logp = policy.log_probabilities(ctx);
    const double r = std::exp(logp[a]) / b;
    const double clipped = std::clamp(r, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    total += std::min(r * adv, clipped * adv);
    if (cfg.kl_coeff != 0.0) {
      const auto ref = reference.log_probabilities(ctx);
      double kl = 0.0;
      for (std::size_t k = 0; k < logp.size(); ++k) kl += std::exp(logp[k]) * (logp[k] - ref[k]);
      total -= cfg.kl_coeff * kl;
    }
  });
  return total;
}

PolicyGradient surrogate_gradient(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                                  std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg) {
  PolicyGradient grad;
  const double inv_t = 1.0 / policy.temperature();
  for_each_step(policy, groups, advantages, cfg, [&](const std::string& ctx, std::size_t a, double adv, double b) {
    const auto logp = policy.log_probabilities(ctx);
    const std::size_t n = logp.size();
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::exp(logp[k]);
    auto& g = grad.try_emplace(ctx, n, 0.0).first->second;

    // The min() picks the clipped branch, which is flat in theta, exactly when
    // the ratio has left the trust region in the direction the advantage favors.
    const double r = p[a] / b;
    const bool clipped = (adv > 0.0 && r > 1.0 + cfg.clip_eps) || (adv < 0.0 && r < 1.0 - cfg.clip_eps);
    if (!clipped && adv != 0.0) {
      for (std::size_t k = 0; k < n; ++k) g[k] += adv * r * ((k == a ? 1.0 : 0.0) - p[k]) * inv_t;
    }
    if (cfg.kl_coeff != 0.0) {
      const auto ref = reference.log_probabilities(ctx);
      double kl = 0.0;
      for (std::size_t k = 0; k < n; ++k) kl += p[k] * (logp[k] - ref[k]);
      for (std::size_t k = 0; k < n; ++k) g[k] -= cfg.kl_coeff * p[k] * (logp[k] - ref[k] - kl) * inv_t;
    }
  });
  return grad;
}

double gradient_norm(const PolicyGradient& grad) {
  double sq = 0.0;
  for (const auto& [ctx, g] : grad)
    for (double v : g) sq += v * v;
  return std::sqrt(sq);
}

UpdateResult surrogate_update(const Policy& policy, const Policy& reference, std::span<const Group> groups,
                              std::span<const RefinedAdvantages> advantages, const SurrogateConfig& cfg,
                              double learning_rate) {
  const PolicyGradient grad = surrogate_gradient(policy, reference, groups, advantages, cfg);
  UpdateResult out{policy, gradient_norm(grad)};
  for (const auto& [ctx, g] : grad) {
    bool nonzero = false;
    for (double v : g) nonzero |= v != 0.0;
    if (!nonzero) continue;
    auto& z = out.policy.mutable_logits(ctx);
    for (std::size_t k = 0; k < g.size(); ++k) z[k] += learning_rate * g[k];
  }
  return out;
}

double evaluate(const Policy& policy, const TrainConfig& cfg, std::uint64_t seed, std::size_t tag,
                std::size_t episodes) {
  Rng rng(derive_seed(seed, 0xe7a1'0000, tag));
  std::size_t wins = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto [state, task] = reset(cfg.env, derive_seed(seed, 0xe7a1'0001 + tag, e), 0);
    std::vector<Step> steps;
    while (!state.done) {
      const std::string ctx = policy_context(task, steps, steps.size(), cfg.policy_window, cfg.match);
      const std::size_t k = policy.sample(ctx, cfg.eval_temperature, rng);
      StepResult res = step(state, policy.actions()[k]);
      steps.push_back({policy.actions()[k], res.observation});
      state = std::move(res.state);
    }
    if (state.success) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(episodes);
}

TrainRun train_run(const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Policy policy(action_vocabulary(cfg.env), cfg.temperature);
  const Policy reference = policy;
  Rng rng(derive_seed(seed, 0x7a11));
  const RolloutOptions rollout{cfg.policy_window, cfg.match, cfg.temperature};
  const SurrogateConfig surrogate{cfg.clip_eps, cfg.kl_coeff, cfg.policy_window, cfg.match};

  TrainReport report;
  report.seed = seed;
  report.eval_episodes = cfg.eval_episodes;

  for (std::size_t u = 0; u < cfg.updates; ++u) {
    std::vector<Group> sampled;
    std::vector<Group> batch;
    std::vector<RefinedAdvantages> batch_adv;
    std::size_t merges = 0, ops = 0, conflicts = 0;
    double reward_sum = 0.0;
    std::size_t n_traj = 0;

    for (std::size_t g = 0; g < cfg.groups_per_update; ++g) {
      Group group = rollout_group(policy, cfg.env, cfg.group_size, derive_seed(seed, u, g), rng, rollout);
      for (const auto& t : group.trajectories()) {
        reward_sum += t.reward;
        ++n_traj;
      }
      std::vector<double> rewards;
      for (const auto& t : group.trajectories()) rewards.push_back(t.reward);
      const bool degenerate = estimate_advantages(cfg.estimator, rewards).degenerate;

      Group with_adv = broadcast_group_advantages(group, cfg.estimator);
      const TrajGraph graph = build_graph(with_adv, cfg.history_len, cfg.match);
      merges += graph.merge_ops;
      ops += graph.edge_count();
      conflicts += conflict_groups(graph, with_adv).count;
      RefinedAdvantages adv = cfg.use_salt ? refine(graph, with_adv) : current_advantages(with_adv);

      sampled.push_back(group);
      if (cfg.skip_degenerate && degenerate) continue;
      batch.push_back(std::move(with_adv));
      batch_adv.push_back(std::move(adv));
    }

    UpdateResult step_result = surrogate_update(policy, reference, batch, batch_adv, surrogate, cfg.learning_rate);
    policy = std::move(step_result.policy);

    UpdateRecord rec;
    rec.update = u;
    rec.mean_reward = reward_sum / static_cast<double>(n_traj);
    rec.success_rate = success_rate(sampled);
    rec.merge_rate = aggregate_merge_rate(merges, ops);
    rec.conflict_count = conflicts;
    rec.grad_norm = step_result.grad_norm;
    report.updates.push_back(rec);

    if (cfg.eval_interval > 0 && (u + 1) % cfg.eval_interval == 0)
      report.evaluations.push_back({u, evaluate(policy, cfg, seed, u + 1, cfg.eval_episodes)});
  }
  report.final_success_rate = evaluate(policy, cfg, seed, 0, cfg.eval_episodes);
  return {std::move(report), std::move(policy)};
}

TrainReport train(const TrainConfig& cfg, std::uint64_t seed) { return train_run(cfg, seed).report; }

std::string report_to_ndjson(const TrainReport& report) {
  std::string out;
  for (const auto& r : report.updates) {
    nlohmann::ordered_json obj;
    obj["seed"] = report.seed;
    obj["update"] = r.update;
    obj["mean_reward"] = r.mean_reward;
    obj["success_rate"] = r.success_rate;
    obj["merge_rate"] = r.merge_rate;
    obj["conflict_count"] = r.conflict_count;
    obj["grad_norm"] = r.grad_norm;
    out += obj.dump() + "\n";
  }
  for (const auto& e : report.evaluations) {
    nlohmann::ordered_json obj;
    obj["seed"] = report.seed;
    obj["update"] = e.update;
    obj["eval_success_rate"] = e.success_rate;
    out += obj.dump() + "\n";
  }
  nlohmann::ordered_json fin;
  fin["seed"] = report.seed;
  fin["final_success_rate"] = report.final_success_rate;
  fin["eval_episodes"] = report.eval_episodes;
  out += fin.dump() + "\n";
  return out;
}

std::string reports_to_csv(std::span<const TrainReport> reports) {
  std::string out = "seed,update,mean_reward,success_rate,merge_rate,conflict_count,grad_norm\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.updates) {
      out += std::to_string(rep.seed) + "," + std::to_string(r.update) + "," + fmt(r.mean_reward) + "," +
             fmt(r.success_rate) + "," + fmt(r.merge_rate) + "," + std::to_string(r.conflict_count) + "," +
             fmt(r.grad_norm) + "\n";
    }
  }
  return out;
}

}  // namespace stepsalt
