#include "stepsalt/salt.hpp"

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

void check_shapes(const TrajGraph& graph, const Group& group) {
  if (graph.task_id != group.task().id)
    throw ConsistencyError("graph was built for task '" + graph.task_id + "', group is '" + group.task().id + "'");
  if (graph.traj_lengths.size() != group.size())
    throw ConsistencyError("graph covers " + std::to_string(graph.traj_lengths.size()) +
                           " trajectories, group has " + std::to_string(group.size()));
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (graph.traj_lengths[i] != group[i].steps.size())
      throw ConsistencyError("trajectory " + std::to_string(i) + " length differs from the graph's");
  }
}

}  // namespace

RefinedAdvantages current_advantages(const Group& group) {
  RefinedAdvantages out;
  out.per_traj.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!group[i].advantages)
      throw PreconditionError("trajectory " + std::to_string(i) + " has no advantages set");
    out.per_traj.push_back(*group[i].advantages);
  }
  return out;
}

RefinedAdvantages refine(const TrajGraph& graph, const Group& group) {
  check_shapes(graph, group);
  const RefinedAdvantages input = current_advantages(group);
  RefinedAdvantages out = input;
  for (const auto& mg : graph.groups) {
    if (mg.divergent()) continue;
    // Offsets from the representative keep equal-valued groups exact.
    const auto& rep = mg.representative();
    const double base = input.per_traj[rep.traj_index][rep.step_index];
    double offset = 0.0;
    for (const auto& e : mg.members) offset += input.per_traj[e.traj_index][e.step_index] - base;
    const double mean = base + offset / static_cast<double>(mg.size());
    for (const auto& e : mg.members) out.per_traj[e.traj_index][e.step_index] = mean;
  }
  return out;
}

ConflictReport conflict_groups(const TrajGraph& graph, const Group& group) {
  check_shapes(graph, group);
  const RefinedAdvantages input = current_advantages(group);
  ConflictReport report;
  for (std::size_t g = 0; g < graph.groups.size(); ++g) {
    const auto& mg = graph.groups[g];
    if (mg.divergent()) continue;
    bool pos = false, neg = false;
    for (const auto& e : mg.members) {
      const double a = input.per_traj[e.traj_index][e.step_index];
      pos |= a > 0.0;
      neg |= a < 0.0;
    }
    if (pos && neg) {
      ++report.count;
      report.group_indices.push_back(g);
    }
  }
  return report;
}

std::vector<double> group_values(const TrajGraph& graph, const RefinedAdvantages& advantages) {
  std::vector<double> out;
  out.reserve(graph.groups.size());
  for (const auto& mg : graph.groups) {
    const auto& rep = mg.representative();
    if (rep.traj_index >= advantages.per_traj.size() ||
        rep.step_index >= advantages.per_traj[rep.traj_index].size())
      throw ConsistencyError("group_values: advantages do not cover the graph");
    out.push_back(advantages.per_traj[rep.traj_index][rep.step_index]);
  }
  return out;
}

}  // namespace stepsalt
