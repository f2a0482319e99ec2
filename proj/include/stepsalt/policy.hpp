#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepsalt/core_types.hpp"
#include "stepsalt/matchers.hpp"

namespace stepsalt {

/// Context the policy conditions on before step t: the encoded state key of
/// the last `window` (action, observation) pairs, rooted at the task while
/// t < window.
std::string policy_context(const Task& task, std::span<const Step> steps, std::size_t t, std::size_t window,
                           const MatchConfig& cfg);

/// Random stream used for action sampling. Built on mt19937_64, whose output
/// sequence is fixed by the standard; the uniform mapping is our own so runs
/// reproduce across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Tabular softmax policy: context -> logits over a fixed action list.
/// Unseen contexts have all-zero logits (uniform distribution).
class Policy {
 public:
  Policy(std::vector<std::string> actions, double temperature = 1.0);

  const std::vector<std::string>& actions() const { return actions_; }
  std::size_t num_actions() const { return actions_.size(); }
  double temperature() const { return temperature_; }
  std::size_t action_index(std::string_view action) const;  // throws PreconditionError

  std::span<const double> logits(const std::string& context) const;
  void set_logits(const std::string& context, std::vector<double> logits);
  std::vector<double>& mutable_logits(const std::string& context);

  /// log pi(.|context) at `temperature` (the policy's own when omitted).
  std::vector<double> log_probabilities(const std::string& context) const;
  std::vector<double> log_probabilities(const std::string& context, double temperature) const;
  std::vector<double> probabilities(const std::string& context) const;
  std::vector<double> probabilities(const std::string& context, double temperature) const;

  /// Inverse-CDF sample at `temperature`; returns the action index.
  std::size_t sample(const std::string& context, double temperature, Rng& rng) const;
  static std::size_t sample_index(std::span<const double> probs, Rng& rng);

  const std::map<std::string, std::vector<double>>& table() const { return table_; }

  /// Versioned JSON text checkpoint and its inverse (ParseError on bad input).
  std::string to_checkpoint() const;
  static Policy from_checkpoint(std::string_view text);

  bool operator==(const Policy&) const = default;

 private:
  std::vector<std::string> actions_;
  double temperature_;
  std::map<std::string, std::vector<double>> table_;
  std::vector<double> zeros_;
};

}  // namespace stepsalt

namespace stepsalt {

/// Deterministic seed derivation (splitmix64 chain) for independent streams.
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace stepsalt
