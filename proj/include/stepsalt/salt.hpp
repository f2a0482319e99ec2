#pragma once

#include <cstddef>
#include <vector>

#include "stepsalt/core_types.hpp"
#include "stepsalt/traj_graph.hpp"

namespace stepsalt {

/// Step-level advantages: per_traj[i][t] is the advantage of step t of
/// trajectory i.
struct RefinedAdvantages {
  std::vector<std::vector<double>> per_traj;

  bool operator==(const RefinedAdvantages&) const = default;
};

/// The group's current advantage slots. Throws PreconditionError if any
/// trajectory has none.
RefinedAdvantages current_advantages(const Group& group);

/// Replaces every merged edge's advantage by the unweighted mean over its
/// merge group's instances; divergent (singleton) edges keep their value.
///
/// `graph` must have been built from `group` (ConsistencyError otherwise)
/// and every trajectory must carry advantages (PreconditionError). The
/// input is not modified.
RefinedAdvantages refine(const TrajGraph& graph, const Group& group);

/// Merge groups of size >= 2 whose input advantages contain both a
/// positive and a negative value.
struct ConflictReport {
  std::size_t count = 0;
  std::vector<std::size_t> group_indices;  // into graph.groups
};

ConflictReport conflict_groups(const TrajGraph& graph, const Group& group);

/// One value per merge group (its representative's entry in `advantages`),
/// in graph order; the shape export_dot expects.
std::vector<double> group_values(const TrajGraph& graph, const RefinedAdvantages& advantages);

}  // namespace stepsalt
