#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepsalt/core_types.hpp"
#include "stepsalt/matchers.hpp"

namespace stepsalt {

/// One (action, observation) pair inside a state window, canonicalized.
struct WindowPair {
  std::string action;
  std::string observation;

  bool operator==(const WindowPair&) const = default;
};

/// The state reached after t steps: the most recent min(t, h) pairs.
///
/// While t < h the window reaches back to the task start and the key is
/// rooted: it carries the task id, and two rooted keys can only match when
/// their whole from-start histories match. t == 0 is the task root itself.
struct StateKey {
  std::vector<WindowPair> window;
  bool rooted = false;
  std::optional<std::string> task_anchor;
  std::size_t history_len = 0;

  bool is_root() const { return rooted && window.empty(); }
  bool operator==(const StateKey&) const = default;
};

/// Key of the state after the first `t` of `steps` (0 <= t <= steps.size()).
/// Throws PreconditionError for t out of range and ConfigError for h < 1.
StateKey state_key(const Task& task, std::span<const Step> steps, std::size_t t, std::size_t h,
                   const MatchConfig& cfg);
StateKey state_key(const Trajectory& traj, std::size_t t, std::size_t h, const MatchConfig& cfg);

/// Injective text encoding of a key (length-prefixed fields). Equal keys give
/// equal strings; used for DOT node ids and policy context lookup.
std::string encode_state_key(const StateKey& key);

/// Same rooted flag and anchor, same window length, and every aligned pair
/// equivalent under `cfg` (actions and observations in windows use the state
/// threshold).
bool keys_equivalent(const StateKey& a, const StateKey& b, const MatchConfig& cfg);

/// A single action taken at `step_index` of trajectory `traj_index`:
/// src --action--> dst.
struct EdgeInstance {
  StateKey src;
  std::string action;
  StateKey dst;
  std::size_t traj_index = 0;
  std::size_t step_index = 0;

  bool operator==(const EdgeInstance&) const = default;
};

/// src keys equivalent, actions equivalent (action threshold) and dst keys
/// equivalent. Throws ConfigError if the edges were built with different h.
bool edges_mergeable(const EdgeInstance& a, const EdgeInstance& b, const MatchConfig& cfg);

/// Edge instances unified by merge operations. members.front() is the
/// representative every later member was matched against.
struct MergeGroup {
  std::vector<EdgeInstance> members;

  const EdgeInstance& representative() const { return members.front(); }
  std::size_t size() const { return members.size(); }
  bool divergent() const { return members.size() == 1; }
};

/// Merge groups partitioning every edge instance of one rollout group.
struct TrajGraph {
  std::vector<MergeGroup> groups;
  std::size_t merge_ops = 0;
  std::size_t diverge_ops = 0;
  std::size_t h = 0;
  MatchConfig match;
  std::string task_id;
  /// Step count of each trajectory the graph was built from.
  std::vector<std::size_t> traj_lengths;

  std::size_t edge_count() const { return merge_ops + diverge_ops; }
};

enum class BuildStrategy {
  /// Hash lookup in exact mode, representative scan in embed mode.
  Auto,
  /// Always scan representatives in insertion order.
  LinearScan,
};

/// Greedy sequential construction: trajectories in index order, steps from
/// first to last. Each edge joins the first existing merge group whose
/// representative it is mergeable with (a merge op) or opens a new group (a
/// diverge op). Throws ConfigError for h < 1.
TrajGraph build_graph(const Group& group, std::size_t h, const MatchConfig& cfg,
                      BuildStrategy strategy = BuildStrategy::Auto);

/// merge_ops / (merge_ops + diverge_ops). Throws PreconditionError on an
/// empty graph.
double merge_rate(const TrajGraph& graph);

/// Per-graph statistics emitted by the analysis tooling.
struct GraphStats {
  std::size_t h = 0;
  std::size_t merge_ops = 0;
  std::size_t diverge_ops = 0;
  double merge_rate = 0.0;
  std::size_t n_groups = 0;
};

GraphStats graph_stats(const TrajGraph& graph);

/// Graphviz rendering. Each merge group is one edge labeled with its action
/// and member count; `group_advantages`, when non-empty, must hold one value
/// per merge group and is appended to the labels.
std::string export_dot(const TrajGraph& graph, std::span<const double> group_advantages = {});

}  // namespace stepsalt
