#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "stepsalt/trainer.hpp"

namespace stepsalt {

/// Flat key-value run configuration. Sections prefix their keys:
///
///   [train]
///   group_size = 8
///   [env]
///   kind = distractor
///
/// is stored as {"train.group_size": "8", "env.kind": "distractor"}. Lines
/// starting with '#' or ';' are comments.
struct RunConfig {
  std::map<std::string, std::string> values;

  /// Throws ConfigError citing the line for malformed input.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies "section.key=value" (a leading "--" is accepted).
  void set_override(std::string_view assignment);

  /// Builds and validates a TrainConfig. `env.kind` is required; unknown
  /// keys and unparsable values are ConfigErrors naming the key.
  TrainConfig to_train_config() const;

  /// Every key of `cfg` in this format; to_train_config() inverts it.
  static std::string render(const TrainConfig& cfg);
};

}  // namespace stepsalt
