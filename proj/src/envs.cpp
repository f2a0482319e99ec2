#include "stepsalt/envs.hpp"

#include <algorithm>
#include <array>

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

constexpr std::array<std::string_view, 6> kPrefixActions = {
    "take map", "open gate", "light torch", "cross bridge", "climb ladder", "unlock hatch"};
constexpr std::array<std::string_view, 6> kPrefixDone = {
    "You take the map.",          "The gate creaks open.",     "The torch flickers to life.",
    "You cross the rope bridge.", "You climb the ladder.",     "The hatch unlocks."};
constexpr std::array<std::string_view, 11> kNoOps = {
    "look around", "wait",      "check inventory", "hum a tune", "stretch", "tie shoelaces",
    "count coins", "whistle",   "yawn",            "scratch head", "sit down"};
constexpr std::array<std::string_view, 4> kNoiseSuffix = {
    " A bird sings.", " Wind howls outside.", " You hear distant footsteps.", " Dust drifts in the light."};
constexpr std::array<std::string_view, 2> kBranches = {"go left", "go right"};
constexpr std::array<std::string_view, 6> kGridActions = {"up", "down", "left", "right", "pick", "open"};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError("env." + key + ": " + why);
}

std::size_t chain_answer(const EnvState& s, std::size_t stage) {
  return mix(s.spec.seed, s.variant, 0xc4a1'0000 + stage) % s.spec.branching;
}

std::size_t distractor_answer(const EnvState& s) { return mix(s.spec.seed, s.variant, 0xd157) % 2; }

bool is_noop(std::string_view action, std::size_t k) {
  return std::find(kNoOps.begin(), kNoOps.begin() + static_cast<std::ptrdiff_t>(k), action) !=
         kNoOps.begin() + static_cast<std::ptrdiff_t>(k);
}

std::string grid_view(const EnvState& s) {
  std::string obs = "You are at (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ").";
  if (!s.has_key && s.x == s.key_x && s.y == s.key_y) obs += " A key lies here.";
  if (s.x == s.door_x && s.y == s.door_y) obs += " A locked door is here.";
  if (s.has_key) obs += " You carry the key.";
  return obs;
}

bool blocked(const EnvSpec& spec, int x, int y) {
  const int n = static_cast<int>(spec.grid_size);
  return x < 0 || y < 0 || x >= n || y >= n || x == spec.blocked_column;
}

void place_keydoor(EnvState& s) {
  const auto& spec = s.spec;
  const int n = static_cast<int>(spec.grid_size);
  std::vector<std::pair<int, int>> cells;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (!(x == 0 && y == 0) && x != spec.blocked_column) cells.emplace_back(x, y);
  const std::uint64_t h = mix(spec.seed, s.variant, 0x6e1);
  const auto key = cells[h % cells.size()];
  auto door = cells[(h >> 20) % cells.size()];
  if (door == key) door = cells[((h >> 20) + 1) % cells.size()];
  s.key_x = spec.key_x >= 0 ? spec.key_x : key.first;
  s.key_y = spec.key_y >= 0 ? spec.key_y : key.second;
  s.door_x = spec.door_x >= 0 ? spec.door_x : door.first;
  s.door_y = spec.door_y >= 0 ? spec.door_y : door.second;
}

std::string prompt_for(const EnvState& s) {
  const auto& spec = s.spec;
  switch (spec.kind) {
    case EnvKind::Chain:
      return "Open " + std::to_string(spec.chain_length) + " doors in sequence. Each room has " +
             std::to_string(spec.branching) +
             " levers; one opens the next door, the others spring a trap. You are in room 1 of " +
             std::to_string(spec.chain_length) + ".";
    case EnvKind::Distractor: {
      std::string p = "Find the treasure. Required steps in order:";
      for (std::size_t i = 0; i < spec.prefix_length; ++i) p += (i ? ", " : " ") + std::string(kPrefixActions[i]);
      return p + "; then choose a path: go left or go right.";
    }
    case EnvKind::KeyDoor:
      return "Pick up the key and open the door in a " + std::to_string(spec.grid_size) + "x" +
             std::to_string(spec.grid_size) + " grid. " + grid_view(s);
  }
  return {};
}

struct Outcome {
  std::string observation;
  bool terminal = false;
  bool success = false;
};

Outcome step_chain(EnvState& s, std::string_view action) {
  const auto& spec = s.spec;
  if (s.trapped) return {"You are stuck. Nothing happens."};
  std::size_t lever = 0;
  for (; lever < spec.branching; ++lever)
    if (action == "pull lever " + std::to_string(lever + 1)) break;
  if (lever == spec.branching) return {"Invalid action."};
  if (lever != chain_answer(s, s.stage)) {
    s.trapped = true;
    return {"A trap springs. You are stuck."};
  }
  ++s.stage;
  if (s.stage == spec.chain_length) return {"The last door opens. Task complete.", true, true};
  return {"Door " + std::to_string(s.stage) + " opens. You enter room " + std::to_string(s.stage + 1) + " of " +
          std::to_string(spec.chain_length) + "."};
}

Outcome step_distractor(EnvState& s, std::string_view action) {
  const auto& spec = s.spec;
  if (is_noop(action, spec.distractors)) {
    std::string obs = "Nothing changes.";
    const std::uint64_t h = mix(s.episode_seed, s.rollout_index, 0x5eed'0000 + s.t);
    if (spec.distractor_noise > 0.0 && unit(h) < spec.distractor_noise)
      obs += kNoiseSuffix[(h >> 7) % kNoiseSuffix.size()];
    return {obs};
  }
  if (s.stage < spec.prefix_length) {
    if (action == kPrefixActions[s.stage]) {
      ++s.stage;
      return {std::string(kPrefixDone[s.stage - 1])};
    }
    for (std::size_t i = 0; i < spec.prefix_length; ++i)
      if (action == kPrefixActions[i]) return {"You can't do that now."};
    if (action == kBranches[0] || action == kBranches[1]) return {"You can't do that yet."};
    return {"Invalid action."};
  }
  if (action == kBranches[distractor_answer(s)]) return {"You find the treasure. Task complete.", true, true};
  if (action == kBranches[1 - distractor_answer(s)]) return {"You fall into a pit. Task failed.", true, false};
  for (std::size_t i = 0; i < spec.prefix_length; ++i)
    if (action == kPrefixActions[i]) return {"You already did that."};
  return {"Invalid action."};
}

Outcome step_keydoor(EnvState& s, std::string_view action) {
  int dx = 0, dy = 0;
  if (action == "up") {
    dy = -1;
  } else if (action == "down") {
    dy = 1;
  } else if (action == "left") {
    dx = -1;
  } else if (action == "right") {
    dx = 1;
  } else if (action == "pick") {
    if (!s.has_key && s.x == s.key_x && s.y == s.key_y) {
      s.has_key = true;
      return {"You pick up the key. " + grid_view(s)};
    }
    return {"There is nothing to pick up. " + grid_view(s)};
  } else if (action == "open") {
    if (s.x == s.door_x && s.y == s.door_y) {
      if (s.has_key) return {"The door opens. Task complete.", true, true};
      return {"The door is locked. " + grid_view(s)};
    }
    return {"There is nothing to open here. " + grid_view(s)};
  } else {
    return {"Invalid action. " + grid_view(s)};
  }
  if (blocked(s.spec, s.x + dx, s.y + dy)) return {"You bump into a wall. " + grid_view(s)};
  s.x += dx;
  s.y += dy;
  return {grid_view(s)};
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Chain: return "chain";
    case EnvKind::Distractor: return "distractor";
    case EnvKind::KeyDoor: return "keydoor";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view text) {
  if (text == "chain") return EnvKind::Chain;
  if (text == "distractor") return EnvKind::Distractor;
  if (text == "keydoor") return EnvKind::KeyDoor;
  throw ConfigError("env.kind: expected chain|distractor|keydoor, got '" + std::string(text) + "'");
}

void EnvSpec::validate() const {
  require(horizon >= 1 && horizon <= kMaxHorizon, "horizon", "must lie in [1, 50]");
  require(task_variants >= 1, "task_variants", "must be >= 1");
  switch (kind) {
    case EnvKind::Chain:
      require(chain_length >= 1, "chain_length", "must be >= 1");
      require(branching >= 2 && branching <= kMaxVocabulary, "branching", "must lie in [2, 16]");
      break;
    case EnvKind::Distractor:
      require(prefix_length >= 1 && prefix_length <= kPrefixActions.size(), "prefix_length", "must lie in [1, 6]");
      require(distractors <= kNoOps.size(), "distractors", "must lie in [0, 11]");
      require(prefix_length + 2 + distractors <= kMaxVocabulary, "distractors",
              "prefix_length + 2 + distractors must not exceed 16");
      require(distractor_noise >= 0.0 && distractor_noise <= 1.0, "distractor_noise", "must lie in [0, 1]");
      require(horizon > prefix_length, "horizon", "must exceed prefix_length");
      break;
    case EnvKind::KeyDoor: {
      require(grid_size >= 2 && grid_size <= 8, "grid_size", "must lie in [2, 8]");
      const int n = static_cast<int>(grid_size);
      require(blocked_column == -1 || (blocked_column >= 1 && blocked_column < n), "blocked_column",
              "must be -1 or lie in [1, grid_size)");
      auto in_grid = [n](int v) { return v == -1 || (v >= 0 && v < n); };
      require(in_grid(key_x) && in_grid(key_y), "key_x", "key position outside the grid");
      require(in_grid(door_x) && in_grid(door_y), "door_x", "door position outside the grid");
      require((key_x < 0) == (key_y < 0), "key_y", "set both key_x and key_y or neither");
      require((door_x < 0) == (door_y < 0), "door_y", "set both door_x and door_y or neither");
      require(key_x < 0 || door_x < 0 || key_x != door_x || key_y != door_y, "door_x",
              "key and door must not share a cell");
      break;
    }
  }
}

std::vector<std::string> action_vocabulary(const EnvSpec& spec) {
  std::vector<std::string> out;
  switch (spec.kind) {
    case EnvKind::Chain:
      for (std::size_t i = 1; i <= spec.branching; ++i) out.push_back("pull lever " + std::to_string(i));
      break;
    case EnvKind::Distractor:
      for (std::size_t i = 0; i < spec.prefix_length; ++i) out.emplace_back(kPrefixActions[i]);
      for (auto b : kBranches) out.emplace_back(b);
      for (std::size_t i = 0; i < spec.distractors; ++i) out.emplace_back(kNoOps[i]);
      break;
    case EnvKind::KeyDoor:
      for (auto a : kGridActions) out.emplace_back(a);
      break;
  }
  return out;
}

std::pair<EnvState, Task> reset(const EnvSpec& spec, std::uint64_t episode_seed, std::uint32_t rollout_index) {
  spec.validate();
  EnvState s;
  s.spec = spec;
  s.episode_seed = episode_seed;
  s.rollout_index = rollout_index;
  s.variant = spec.task_variants == 1 ? 0 : splitmix(episode_seed) % spec.task_variants;
  if (spec.kind == EnvKind::KeyDoor) {
    place_keydoor(s);
    if (s.key_x == s.door_x && s.key_y == s.door_y)
      throw ConfigError("env.door_x: key and door must not share a cell");
  }
  Task task;
  task.id = std::string(to_string(spec.kind)) + "-s" + std::to_string(spec.seed) + "-v" + std::to_string(s.variant);
  task.prompt = prompt_for(s);
  s.observation = task.prompt;
  return {std::move(s), std::move(task)};
}

StepResult step(const EnvState& state, std::string_view action) {
  if (state.done) throw PreconditionError("step: episode already finished");
  StepResult r{state, {}, false, false};
  EnvState& s = r.state;
  Outcome out;
  switch (s.spec.kind) {
    case EnvKind::Chain: out = step_chain(s, action); break;
    case EnvKind::Distractor: out = step_distractor(s, action); break;
    case EnvKind::KeyDoor: out = step_keydoor(s, action); break;
  }
  ++s.t;
  if (s.spec.tag_rollouts)
    out.observation += " [r" + std::to_string(s.rollout_index) + ":t" + std::to_string(s.t) + "]";
  s.success = out.success;
  s.done = out.terminal || s.t >= s.spec.horizon;
  s.observation = out.observation;
  r.observation = std::move(out.observation);
  r.done = s.done;
  r.success = s.success;
  return r;
}

}  // namespace stepsalt
