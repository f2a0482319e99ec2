#include "stepsalt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "stepsalt/errors.hpp"
#include "stepsalt/traj_graph.hpp"

namespace stepsalt {

namespace {
constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "stepsalt-policy";
}  // namespace

std::string policy_context(const Task& task, std::span<const Step> steps, std::size_t t, std::size_t window,
                           const MatchConfig& cfg) {
  return encode_state_key(state_key(task, steps, t, window, cfg));
}

Policy::Policy(std::vector<std::string> actions, double temperature)
    : actions_(std::move(actions)), temperature_(temperature), zeros_(actions_.size(), 0.0) {
  if (actions_.empty()) throw ConfigError("policy: action list is empty");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_))
    throw ConfigError("policy.temperature: must be positive");
}

std::size_t Policy::action_index(std::string_view action) const {
  auto it = std::find(actions_.begin(), actions_.end(), action);
  if (it == actions_.end()) throw PreconditionError("policy: unknown action '" + std::string(action) + "'");
  return static_cast<std::size_t>(it - actions_.begin());
}

std::span<const double> Policy::logits(const std::string& context) const {
  auto it = table_.find(context);
  return it == table_.end() ? std::span<const double>(zeros_) : std::span<const double>(it->second);
}

void Policy::set_logits(const std::string& context, std::vector<double> logits) {
  if (logits.size() != actions_.size()) throw PreconditionError("policy: logits size mismatch");
  for (double z : logits)
    if (!std::isfinite(z)) throw PreconditionError("policy: logits must be finite");
  table_[context] = std::move(logits);
}

std::vector<double>& Policy::mutable_logits(const std::string& context) {
  return table_.try_emplace(context, actions_.size(), 0.0).first->second;
}

std::vector<double> Policy::log_probabilities(const std::string& context) const {
  return log_probabilities(context, temperature_);
}

std::vector<double> Policy::log_probabilities(const std::string& context, double temperature) const {
  const auto z = logits(context);
  std::vector<double> out(z.size());
  double peak = -INFINITY;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = z[k] / temperature;
    peak = std::max(peak, out[k]);
  }
  double total = 0.0;
  for (double v : out) total += std::exp(v - peak);
  const double lse = peak + std::log(total);
  for (double& v : out) v -= lse;
  return out;
}

std::vector<double> Policy::probabilities(const std::string& context) const {
  return probabilities(context, temperature_);
}

std::vector<double> Policy::probabilities(const std::string& context, double temperature) const {
  auto p = log_probabilities(context, temperature);
  for (double& v : p) v = std::exp(v);
  return p;
}

std::size_t Policy::sample(const std::string& context, double temperature, Rng& rng) const {
  return sample_index(probabilities(context, temperature), rng);
}

std::size_t Policy::sample_index(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    cum += p[k];
    if (u < cum) return k;
  }
  // Rounding left cum just below u: take the last action with mass.
  for (std::size_t k = p.size(); k-- > 0;)
    if (p[k] > 0.0) return k;
  return p.size() - 1;
}

std::string Policy::to_checkpoint() const {
  nlohmann::ordered_json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["temperature"] = temperature_;
  doc["actions"] = actions_;
  auto contexts = nlohmann::ordered_json::array();
  for (const auto& [ctx, z] : table_) contexts.push_back({{"context", ctx}, {"logits", z}});
  doc["contexts"] = std::move(contexts);
  return doc.dump(1) + "\n";
}

Policy Policy::from_checkpoint(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != kCheckpointFormat) throw ParseError("checkpoint: unknown format");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw ParseError("checkpoint: unsupported version " + doc.at("version").dump());
    Policy policy(doc.at("actions").get<std::vector<std::string>>(), doc.at("temperature").get<double>());
    for (const auto& entry : doc.at("contexts"))
      policy.set_logits(entry.at("context").get<std::string>(), entry.at("logits").get<std::vector<double>>());
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace stepsalt

namespace stepsalt {

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

}  // namespace stepsalt
