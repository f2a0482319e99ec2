#include "stepsalt/matchers.hpp"

#include <cmath>
#include <cstdint>

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

void check_threshold(const std::optional<double>& t, const char* name) {
  if (t && !(*t > 0.0 && *t <= 1.0))
    throw ConfigError(std::string("match.") + name + ": must lie in (0, 1]");
}

// FNV-1a, 64-bit, with the offset basis perturbed by a fixed seed so the
// bucket layout is our own and stable across platforms.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL ^ 0x5a17'c0de'2024'0001ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : token) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

void MatchConfig::validate() const {
  if (mode == MatchMode::Exact) {
    if (cosine_threshold || action_threshold)
      throw ConfigError("match.cosine_threshold: only valid in embed mode");
    return;
  }
  if (!cosine_threshold) throw ConfigError("match.cosine_threshold: required in embed mode");
  check_threshold(cosine_threshold, "cosine_threshold");
  check_threshold(action_threshold, "action_threshold");
}

double MatchConfig::state_threshold() const { return cosine_threshold.value_or(1.0); }

double MatchConfig::action_threshold_value() const {
  return action_threshold.value_or(state_threshold());
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::Exact ? "exact" : "embed"; }

MatchMode parse_match_mode(std::string_view text) {
  if (text == "exact") return MatchMode::Exact;
  if (text == "embed") return MatchMode::Embed;
  throw ConfigError("match.mode: expected exact|embed, got '" + std::string(text) + "'");
}

bool TextVector::is_zero() const {
  for (double v : values)
    if (v != 0.0) return false;
  return true;
}

std::string canonicalize(std::string_view text, const MatchConfig& cfg) {
  std::string out;
  out.reserve(text.size());
  if (cfg.normalize_whitespace) {
    bool pending_space = false;
    for (char c : text) {
      if (is_space(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  } else {
    out.assign(text);
  }
  if (cfg.case_fold) {
    for (char& c : out)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

TextVector embed(std::string_view text) {
  TextVector vec;
  std::size_t i = 0;
  bool any = false;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      vec.values[token_hash(text.substr(i, j - i)) % kEmbeddingDims] += 1.0;
      any = true;
    }
    i = j;
  }
  if (!any) return vec;
  double norm2 = 0.0;
  for (double v : vec.values) norm2 += v * v;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : vec.values) v *= inv;
  return vec;
}

double cosine(const TextVector& u, const TextVector& v) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDims; ++i) dot += u.values[i] * v.values[i];
  return dot;
}

bool similar(const TextVector& u, const TextVector& v, double threshold) {
  if (u == v) return true;
  if (u.is_zero() || v.is_zero()) return false;
  return cosine(u, v) > threshold;
}

bool texts_equivalent(std::string_view a, std::string_view b, const MatchConfig& cfg, TextRole role) {
  const std::string ca = canonicalize(a, cfg);
  const std::string cb = canonicalize(b, cfg);
  if (cfg.mode == MatchMode::Exact) return ca == cb;
  const double tau = role == TextRole::Action ? cfg.action_threshold_value() : cfg.state_threshold();
  return similar(embed(ca), embed(cb), tau);
}

}  // namespace stepsalt
