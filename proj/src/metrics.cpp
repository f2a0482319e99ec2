#include "stepsalt/metrics.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "stepsalt/errors.hpp"

namespace stepsalt {

std::string MetricRecord::to_json() const {
  if (!std::isfinite(value)) throw SerializationError("metric '" + name + "': value not finite");
  nlohmann::ordered_json obj;
  obj["name"] = name;
  obj["update"] = update;
  obj["value"] = value;
  if (!tags.empty()) obj["tags"] = tags;
  return obj.dump();
}

double success_rate(std::span<const Group> groups) {
  std::size_t total = 0, wins = 0;
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories()) {
      ++total;
      if (t.reward >= 0.5) ++wins;
    }
  }
  if (total == 0) throw PreconditionError("success_rate: no trajectories");
  return static_cast<double>(wins) / static_cast<double>(total);
}

double aggregate_merge_rate(std::size_t merge_ops, std::size_t total_ops) {
  if (total_ops == 0) throw PreconditionError("aggregate_merge_rate: no graph operations");
  return static_cast<double>(merge_ops) / static_cast<double>(total_ops);
}

double aggregate_merge_rate(std::span<const TrajGraph> graphs) {
  std::size_t merges = 0, total = 0;
  for (const auto& g : graphs) {
    merges += g.merge_ops;
    total += g.edge_count();
  }
  return aggregate_merge_rate(merges, total);
}

RefinementDelta refinement_delta(const std::vector<std::vector<double>>& before,
                                 const std::vector<std::vector<double>>& after) {
  if (before.size() != after.size()) throw ConsistencyError("refinement_delta: shape mismatch");
  RefinementDelta d;
  std::size_t total = 0, changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].size() != after[i].size()) throw ConsistencyError("refinement_delta: shape mismatch");
    for (std::size_t t = 0; t < before[i].size(); ++t) {
      const double diff = std::abs(after[i][t] - before[i][t]);
      d.max_abs_change = std::max(d.max_abs_change, diff);
      if (diff != 0.0) ++changed;
      ++total;
    }
  }
  d.changed_fraction = total ? static_cast<double>(changed) / static_cast<double>(total) : 0.0;
  return d;
}

}  // namespace stepsalt
