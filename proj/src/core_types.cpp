#include "stepsalt/core_types.hpp"

#include <cmath>
#include <utility>

#include "stepsalt/errors.hpp"

namespace stepsalt {

void Task::validate() const {
  if (id.empty()) throw SchemaError("task_id: must be non-empty");
  if (prompt.empty()) throw SchemaError("task prompt: must be non-empty");
}

void Trajectory::validate() const {
  task.validate();
  if (steps.empty()) throw SchemaError("steps: a trajectory needs at least one step");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].action.empty())
      throw SchemaError("steps[" + std::to_string(i) + "].action: must be non-empty");
  }
  if (!std::isfinite(reward)) throw SchemaError("reward: must be finite");
  if (advantages && advantages->size() != steps.size()) {
    throw SchemaError("advantages: length " + std::to_string(advantages->size()) +
                      " does not match " + std::to_string(steps.size()) + " steps");
  }
  if (!behavior_probs.empty() && behavior_probs.size() != steps.size()) {
    throw SchemaError("behavior_probs: length " + std::to_string(behavior_probs.size()) +
                      " does not match " + std::to_string(steps.size()) + " steps");
  }
}

Group::Group(Task task, std::vector<Trajectory> trajectories)
    : task_(std::move(task)), trajectories_(std::move(trajectories)) {
  task_.validate();
  if (trajectories_.empty()) throw SchemaError("group: needs at least one trajectory");
  for (const auto& traj : trajectories_) {
    traj.validate();
    if (traj.task.id != task_.id) {
      throw SchemaError("group: trajectory '" + traj.traj_id + "' belongs to task '" +
                        traj.task.id + "', expected '" + task_.id + "'");
    }
  }
}

Group Group::with_advantages(const std::vector<std::vector<double>>& per_traj) const {
  if (per_traj.size() != trajectories_.size())
    throw ConsistencyError("advantage arrays do not match group size");
  std::vector<Trajectory> out = trajectories_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (per_traj[i].size() != out[i].steps.size())
      throw ConsistencyError("advantage array " + std::to_string(i) + " does not match its trajectory length");
    out[i].advantages = per_traj[i];
  }
  return Group(task_, std::move(out));
}

}  // namespace stepsalt
