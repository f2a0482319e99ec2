#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace stepsalt {

enum class MatchMode { Exact, Embed };

/// How two texts are judged equivalent when building trajectory graphs.
///
/// In Embed mode `cosine_threshold` is required; it applies to observation
/// texts inside state windows. `action_threshold` overrides it for actions
/// and falls back to `cosine_threshold` when unset. Neither may be set in
/// Exact mode.
struct MatchConfig {
  MatchMode mode = MatchMode::Exact;
  std::optional<double> cosine_threshold;
  std::optional<double> action_threshold;
  bool normalize_whitespace = true;
  bool case_fold = false;

  void validate() const;  // throws ConfigError
  double state_threshold() const;
  double action_threshold_value() const;

  static MatchConfig exact() { return {}; }
  static MatchConfig embed(double threshold) {
    MatchConfig cfg;
    cfg.mode = MatchMode::Embed;
    cfg.cosine_threshold = threshold;
    return cfg;
  }

  bool operator==(const MatchConfig&) const = default;
};

std::string_view to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view text);  // throws ConfigError

inline constexpr std::size_t kEmbeddingDims = 256;

/// Unit-norm (or all-zero) embedding produced by `embed`.
struct TextVector {
  std::array<double, kEmbeddingDims> values{};

  bool is_zero() const;
  bool operator==(const TextVector&) const = default;
};

/// Trim and collapse whitespace runs to one space (normalize_whitespace),
/// then ASCII-lowercase (case_fold). Idempotent.
std::string canonicalize(std::string_view text, const MatchConfig& cfg);

/// Hashed bag-of-tokens embedding: whitespace-split tokens are hashed with a
/// fixed seeded FNV-1a into kEmbeddingDims buckets, counted, and
/// L2-normalized. Empty text maps to the zero vector.
TextVector embed(std::string_view text);

double cosine(const TextVector& u, const TextVector& v);

/// cos(u, v) > threshold. Bit-identical vectors (including two zero
/// vectors) are always similar; a zero vector is never similar to a
/// non-zero one.
bool similar(const TextVector& u, const TextVector& v, double threshold);

enum class TextRole { State, Action };

/// Exact: canonicalized byte equality. Embed: `similar` on the embeddings of
/// the canonicalized texts, using the threshold for `role`.
bool texts_equivalent(std::string_view a, std::string_view b, const MatchConfig& cfg,
                      TextRole role = TextRole::State);

}  // namespace stepsalt
