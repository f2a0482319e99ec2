#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace stepsalt {

/// A task instance: the shared root of every trajectory in a group.
struct Task {
  std::string id;
  std::string prompt;

  /// Throws SchemaError when id or prompt is empty.
  void validate() const;

  bool operator==(const Task&) const = default;
};

/// One agent decision and the environment's reply. The observation may be
/// empty on terminal steps.
struct Step {
  std::string action;
  std::string observation;

  bool operator==(const Step&) const = default;
};

/// One rollout of a task.
///
/// `advantages` is unset until an estimator (or a log record) fills it; once
/// set it has one slot per step. `behavior_probs` is only populated by the
/// trainer's rollouts: the probability the sampling policy assigned to each
/// taken action, which the clipped surrogate needs for its ratio.
struct Trajectory {
  Task task;
  std::string group_id;
  std::string traj_id;
  std::vector<Step> steps;
  double reward = 0.0;
  std::optional<std::vector<double>> advantages;
  std::vector<double> behavior_probs;

  std::size_t size() const { return steps.size(); }
  bool has_advantages() const { return advantages.has_value(); }

  /// Throws SchemaError on an empty step list, empty actions, a non-finite
  /// reward, or advantage/behavior-prob arrays whose length disagrees with
  /// the step count.
  void validate() const;

  bool operator==(const Trajectory&) const = default;
};

/// G rollouts of one task. Construction validates that every member refers
/// to the same task id.
class Group {
 public:
  Group(Task task, std::vector<Trajectory> trajectories);

  const Task& task() const { return task_; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t size() const { return trajectories_.size(); }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }

  /// Copy of this group with new per-trajectory advantage arrays.
  Group with_advantages(const std::vector<std::vector<double>>& per_traj) const;

  bool operator==(const Group&) const = default;

 private:
  Task task_;
  std::vector<Trajectory> trajectories_;
};

}  // namespace stepsalt
