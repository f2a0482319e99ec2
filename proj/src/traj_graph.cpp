#include "stepsalt/traj_graph.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <unordered_map>
#include <utility>

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

void check_h(std::size_t h) {
  if (h < 1) throw ConfigError("history_len: must be >= 1");
}

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
}

// Texts of one group interned to dense ids; equivalence questions are then
// asked about ids, with embeddings and similarity verdicts cached.
class InternedGroup {
 public:
  InternedGroup(const Group& group, const MatchConfig& cfg) : cfg_(cfg) {
    actions_.resize(group.size());
    observations_.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (const auto& step : group[i].steps) {
        actions_[i].push_back(intern(canonicalize(step.action, cfg)));
        observations_[i].push_back(intern(canonicalize(step.observation, cfg)));
      }
    }
  }

  const std::string& text(std::uint32_t id) const { return texts_[id]; }
  std::uint32_t action(std::size_t traj, std::size_t step) const { return actions_[traj][step]; }
  std::uint32_t observation(std::size_t traj, std::size_t step) const { return observations_[traj][step]; }

  bool same_text(std::uint32_t a, std::uint32_t b, TextRole role) {
    if (a == b) return true;
    if (cfg_.mode == MatchMode::Exact) return false;
    const std::uint64_t key = (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b);
    auto& cache = role == TextRole::Action ? action_sim_ : state_sim_;
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double tau = role == TextRole::Action ? cfg_.action_threshold_value() : cfg_.state_threshold();
    const bool verdict = similar(embedding(a), embedding(b), tau);
    cache.emplace(key, verdict);
    return verdict;
  }

 private:
  std::uint32_t intern(std::string text) {
    auto [it, inserted] = ids_.try_emplace(std::move(text), static_cast<std::uint32_t>(texts_.size()));
    if (inserted) texts_.push_back(it->first);
    return it->second;
  }

  const TextVector& embedding(std::uint32_t id) {
    if (embeddings_.size() < texts_.size()) embeddings_.resize(texts_.size());
    if (!embeddings_[id]) embeddings_[id] = embed(texts_[id]);
    return *embeddings_[id];
  }

  MatchConfig cfg_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> texts_;
  std::vector<std::vector<std::uint32_t>> actions_;
  std::vector<std::vector<std::uint32_t>> observations_;
  std::vector<std::optional<TextVector>> embeddings_;
  std::unordered_map<std::uint64_t, bool> state_sim_;
  std::unordered_map<std::uint64_t, bool> action_sim_;
};

struct EdgeRef {
  std::size_t traj;
  std::size_t step;
};

class GraphBuilder {
 public:
  GraphBuilder(const Group& group, std::size_t h, const MatchConfig& cfg)
      : group_(group), h_(h), ids_(group, cfg), exact_(cfg.mode == MatchMode::Exact) {}

  std::size_t window_begin(std::size_t t) const { return t >= h_ ? t - h_ : 0; }

  bool states_match(EdgeRef a, std::size_t ta, EdgeRef b, std::size_t tb) {
    const bool ra = ta < h_, rb = tb < h_;
    if (ra != rb) return false;
    const std::size_t la = ta - window_begin(ta), lb = tb - window_begin(tb);
    if (la != lb) return false;
    const std::size_t ba = window_begin(ta), bb = window_begin(tb);
    for (std::size_t k = 0; k < la; ++k) {
      if (!ids_.same_text(ids_.action(a.traj, ba + k), ids_.action(b.traj, bb + k), TextRole::State) ||
          !ids_.same_text(ids_.observation(a.traj, ba + k), ids_.observation(b.traj, bb + k), TextRole::State))
        return false;
    }
    return true;
  }

  bool mergeable(EdgeRef a, EdgeRef b) {
    return states_match(a, a.step, b, b.step) &&
           ids_.same_text(ids_.action(a.traj, a.step), ids_.action(b.traj, b.step), TextRole::Action) &&
           states_match(a, a.step + 1, b, b.step + 1);
  }

  // Exact-mode identity of an edge: (src window, action, dst window) as ids.
  std::vector<std::uint32_t> exact_identity(EdgeRef e) const {
    std::vector<std::uint32_t> key;
    auto push_state = [&](std::size_t t) {
      key.push_back(t < h_ ? 1u : 0u);
      key.push_back(static_cast<std::uint32_t>(t - window_begin(t)));
      for (std::size_t k = window_begin(t); k < t; ++k) {
        key.push_back(ids_.action(e.traj, k));
        key.push_back(ids_.observation(e.traj, k));
      }
    };
    push_state(e.step);
    key.push_back(ids_.action(e.traj, e.step));
    push_state(e.step + 1);
    return key;
  }

  StateKey materialize(std::size_t traj, std::size_t t) const {
    StateKey key;
    key.history_len = h_;
    key.rooted = t < h_;
    if (key.rooted) key.task_anchor = group_.task().id;
    for (std::size_t k = window_begin(t); k < t; ++k)
      key.window.push_back({ids_.text(ids_.action(traj, k)), ids_.text(ids_.observation(traj, k))});
    return key;
  }

  EdgeInstance materialize_edge(EdgeRef e) const {
    return EdgeInstance{materialize(e.traj, e.step), ids_.text(ids_.action(e.traj, e.step)),
                        materialize(e.traj, e.step + 1), e.traj, e.step};
  }

  std::vector<std::vector<EdgeRef>> partition(BuildStrategy strategy, std::size_t& merges, std::size_t& diverges) {
    std::vector<std::vector<EdgeRef>> groups;
    merges = diverges = 0;
    const bool hashed = strategy == BuildStrategy::Auto && exact_;

    struct VecHash {
      std::size_t operator()(const std::vector<std::uint32_t>& v) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto x : v) h = (h ^ x) * 0x100000001b3ULL;
        return static_cast<std::size_t>(h);
      }
    };
    std::unordered_map<std::vector<std::uint32_t>, std::size_t, VecHash> index;

    for (std::size_t i = 0; i < group_.size(); ++i) {
      for (std::size_t t = 0; t < group_[i].steps.size(); ++t) {
        const EdgeRef e{i, t};
        std::optional<std::size_t> target;
        if (hashed) {
          auto [it, inserted] = index.try_emplace(exact_identity(e), groups.size());
          if (!inserted) target = it->second;
        } else {
          for (std::size_t g = 0; g < groups.size(); ++g) {
            if (mergeable(e, groups[g].front())) {
              target = g;
              break;
            }
          }
        }
        if (target) {
          groups[*target].push_back(e);
          ++merges;
        } else {
          groups.push_back({e});
          ++diverges;
        }
      }
    }
    return groups;
  }


 private:
  const Group& group_;
  std::size_t h_;
  InternedGroup ids_;
  bool exact_;
};

std::string escape_dot(std::string_view text, std::size_t max_len = 48) {
  std::string out;
  std::size_t n = 0;
  for (char c : text) {
    if (n == max_len) {
      out += "...";
      break;
    }
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
    ++n;
  }
  return out;
}

std::string node_label(const StateKey& key) {
  if (key.window.empty()) return "q: " + escape_dot(key.task_anchor.value_or(""));
  const auto& last = key.window.back();
  return escape_dot(last.action, 24) + " / " + escape_dot(last.observation);
}

}  // namespace

StateKey state_key(const Task& task, std::span<const Step> steps, std::size_t t, std::size_t h,
                   const MatchConfig& cfg) {
  check_h(h);
  if (t > steps.size())
    throw PreconditionError("state_key: step index " + std::to_string(t) + " out of range [0, " +
                            std::to_string(steps.size()) + "]");
  StateKey key;
  key.history_len = h;
  key.rooted = t < h;
  if (key.rooted) key.task_anchor = task.id;
  for (std::size_t k = t >= h ? t - h : 0; k < t; ++k)
    key.window.push_back({canonicalize(steps[k].action, cfg), canonicalize(steps[k].observation, cfg)});
  return key;
}

StateKey state_key(const Trajectory& traj, std::size_t t, std::size_t h, const MatchConfig& cfg) {
  return state_key(traj.task, traj.steps, t, h, cfg);
}

std::string encode_state_key(const StateKey& key) {
  std::string out = key.rooted ? "R" : "U";
  if (key.task_anchor) append_field(out, *key.task_anchor);
  out += '|';
  for (const auto& pair : key.window) {
    append_field(out, pair.action);
    append_field(out, pair.observation);
  }
  return out;
}

bool keys_equivalent(const StateKey& a, const StateKey& b, const MatchConfig& cfg) {
  if (a.rooted != b.rooted || a.task_anchor != b.task_anchor || a.window.size() != b.window.size())
    return false;
  for (std::size_t k = 0; k < a.window.size(); ++k) {
    if (!texts_equivalent(a.window[k].action, b.window[k].action, cfg, TextRole::State) ||
        !texts_equivalent(a.window[k].observation, b.window[k].observation, cfg, TextRole::State))
      return false;
  }
  return true;
}

bool edges_mergeable(const EdgeInstance& a, const EdgeInstance& b, const MatchConfig& cfg) {
  if (a.src.history_len != b.src.history_len || a.dst.history_len != b.dst.history_len)
    throw ConfigError("edges_mergeable: edges were built with different history lengths");
  return keys_equivalent(a.src, b.src, cfg) && texts_equivalent(a.action, b.action, cfg, TextRole::Action) &&
         keys_equivalent(a.dst, b.dst, cfg);
}

TrajGraph build_graph(const Group& group, std::size_t h, const MatchConfig& cfg, BuildStrategy strategy) {
  check_h(h);
  cfg.validate();
  GraphBuilder builder(group, h, cfg);

  TrajGraph graph;
  graph.h = h;
  graph.match = cfg;
  graph.task_id = group.task().id;
  for (const auto& t : group.trajectories()) graph.traj_lengths.push_back(t.steps.size());

  const auto parts = builder.partition(strategy, graph.merge_ops, graph.diverge_ops);
  graph.groups.reserve(parts.size());
  for (const auto& part : parts) {
    MergeGroup mg;
    mg.members.reserve(part.size());
    for (const auto& e : part) mg.members.push_back(builder.materialize_edge(e));
    graph.groups.push_back(std::move(mg));
  }
  return graph;
}

double merge_rate(const TrajGraph& graph) {
  if (graph.edge_count() == 0) throw PreconditionError("merge_rate: graph has no operations");
  return static_cast<double>(graph.merge_ops) / static_cast<double>(graph.edge_count());
}

GraphStats graph_stats(const TrajGraph& graph) {
  return {graph.h, graph.merge_ops, graph.diverge_ops, merge_rate(graph), graph.groups.size()};
}

std::string export_dot(const TrajGraph& graph, std::span<const double> group_advantages) {
  if (!group_advantages.empty() && group_advantages.size() != graph.groups.size())
    throw ConsistencyError("export_dot: need one advantage per merge group");

  std::map<std::string, std::size_t> node_ids;
  std::string nodes, edges;
  auto node = [&](const StateKey& key) {
    auto [it, inserted] = node_ids.try_emplace(encode_state_key(key), node_ids.size());
    if (inserted) {
      nodes += "  n" + std::to_string(it->second) + " [label=\"" + node_label(key) + "\"" +
               (key.is_root() ? ", shape=doublecircle" : "") + "];\n";
    }
    return it->second;
  };

  for (std::size_t g = 0; g < graph.groups.size(); ++g) {
    const auto& rep = graph.groups[g].representative();
    const std::size_t from = node(rep.src);
    const std::size_t to = node(rep.dst);
    std::string label = escape_dot(rep.action, 32) + " \xC3\x97" + std::to_string(graph.groups[g].size());
    if (!group_advantages.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " A=%+.4f", group_advantages[g]);
      label += buf;
    }
    edges += "  n" + std::to_string(from) + " -> n" + std::to_string(to) + " [label=\"" + label + "\"" +
             (graph.groups[g].divergent() ? "" : ", penwidth=2") + "];\n";
  }

  return "digraph traj_graph {\n  rankdir=LR;\n  label=\"" + escape_dot(graph.task_id) + " (h=" +
         std::to_string(graph.h) + ")\";\n" + nodes + edges + "}\n";
}

}  // namespace stepsalt
