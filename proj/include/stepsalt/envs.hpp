#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stepsalt/core_types.hpp"

namespace stepsalt {

enum class EnvKind { Chain, Distractor, KeyDoor };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view text);  // throws ConfigError

inline constexpr std::size_t kMaxHorizon = 50;
inline constexpr std::size_t kMaxVocabulary = 16;

/// Parameters of a synthetic environment. Which task instance an episode
/// gets is a function of (seed, episode_seed mod task_variants).
struct EnvSpec {
  EnvKind kind = EnvKind::Distractor;
  std::size_t horizon = 15;
  std::uint64_t seed = 0;
  std::size_t task_variants = 1;
  /// Stamp every observation with the rollout index and step, which makes
  /// all trajectories of a group pairwise distinct.
  bool tag_rollouts = false;

  // Chain
  std::size_t chain_length = 5;
  std::size_t branching = 2;

  // Distractor
  std::size_t prefix_length = 3;
  std::size_t distractors = 3;
  /// Probability that a no-op's observation is replaced by a random variant.
  double distractor_noise = 0.0;

  // KeyDoor; -1 picks a seeded position / means no wall.
  std::size_t grid_size = 4;
  int blocked_column = -1;
  int key_x = -1, key_y = -1;
  int door_x = -1, door_y = -1;

  void validate() const;  // throws ConfigError naming the env.* key
  bool operator==(const EnvSpec&) const = default;
};

/// Complete environment state; the observation is rendered from it.
struct EnvState {
  EnvSpec spec;
  std::uint64_t episode_seed = 0;
  std::uint32_t rollout_index = 0;
  std::size_t variant = 0;
  std::size_t t = 0;
  bool done = false;
  bool success = false;

  // Chain / Distractor progress
  std::size_t stage = 0;
  bool trapped = false;

  // KeyDoor
  int x = 0, y = 0;
  bool has_key = false;
  int key_x = 0, key_y = 0;
  int door_x = 0, door_y = 0;

  std::string observation;
};

struct StepResult {
  EnvState state;
  std::string observation;
  bool done = false;
  bool success = false;
};

/// Initial state and task for an episode. The rollout index only feeds the
/// per-rollout observation effects (noise, tags); the task instance depends
/// on (spec, episode_seed) alone.
std::pair<EnvState, Task> reset(const EnvSpec& spec, std::uint64_t episode_seed,
                                std::uint32_t rollout_index = 0);

/// Applies one action. Unknown actions are a no-op with an "Invalid action."
/// observation. An episode ends on success, on a failing move, or when the
/// horizon is reached; stepping a finished episode is a PreconditionError.
StepResult step(const EnvState& state, std::string_view action);

/// Fixed, ordered action list (at most kMaxVocabulary entries).
std::vector<std::string> action_vocabulary(const EnvSpec& spec);

}  // namespace stepsalt
