#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stepsalt/core_types.hpp"
#include "stepsalt/traj_graph.hpp"

namespace stepsalt {

/// A named scalar tied to an update index.
struct MetricRecord {
  std::string name;
  std::size_t update = 0;
  double value = 0.0;
  std::map<std::string, std::string> tags;

  /// Single-line JSON; throws SerializationError for a non-finite value.
  std::string to_json() const;
};

/// Fraction of trajectories with reward >= 0.5. Throws PreconditionError on
/// empty input.
double success_rate(std::span<const Group> groups);

/// Op-weighted merge rate: sum of merges over sum of operations.
double aggregate_merge_rate(std::span<const TrajGraph> graphs);
double aggregate_merge_rate(std::size_t merge_ops, std::size_t total_ops);

struct RefinementDelta {
  double max_abs_change = 0.0;
  double changed_fraction = 0.0;
};

/// Elementwise comparison of two equally shaped advantage tables.
RefinementDelta refinement_delta(const std::vector<std::vector<double>>& before,
                                 const std::vector<std::vector<double>>& after);

}  // namespace stepsalt
