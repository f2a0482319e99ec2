#include "stepsalt/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "stepsalt/errors.hpp"

namespace stepsalt {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::uint64_t>(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.values[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set_override(std::string_view assignment) {
  if (assignment.starts_with("--")) assignment.remove_prefix(2);
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "': expected section.key=value");
  values[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

TrainConfig RunConfig::to_train_config() const {
  TrainConfig cfg;
  if (!values.contains("env.kind")) throw ConfigError("env.kind: missing (expected chain|distractor|keydoor)");

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size = [](std::size_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<std::size_t>(k, v); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<int>(k, v); };
  };
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };
  auto boolean = [](bool& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_bool(k, v); };
  };
  auto optional_real = [](std::optional<double>& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };

  const std::map<std::string, Setter> setters = {
      {"train.estimator", [&](const std::string&, const std::string& v) { cfg.estimator = parse_estimator(v); }},
      {"train.use_salt", boolean(cfg.use_salt)},
      {"train.group_size", size(cfg.group_size)},
      {"train.history_len", size(cfg.history_len)},
      {"train.policy_window", size(cfg.policy_window)},
      {"train.clip_eps", real(cfg.clip_eps)},
      {"train.kl_coeff", real(cfg.kl_coeff)},
      {"train.learning_rate", real(cfg.learning_rate)},
      {"train.temperature", real(cfg.temperature)},
      {"train.eval_temperature", real(cfg.eval_temperature)},
      {"train.updates", size(cfg.updates)},
      {"train.groups_per_update", size(cfg.groups_per_update)},
      {"train.eval_interval", size(cfg.eval_interval)},
      {"train.eval_episodes", size(cfg.eval_episodes)},
      {"train.skip_degenerate", boolean(cfg.skip_degenerate)},
      {"train.seeds", [&](const std::string& k, const std::string& v) { cfg.seeds = parse_seed_list(k, v); }},
      {"env.kind", [&](const std::string&, const std::string& v) { cfg.env.kind = parse_env_kind(v); }},
      {"env.horizon", size(cfg.env.horizon)},
      {"env.seed", [&](const std::string& k, const std::string& v) { cfg.env.seed = parse_number<std::uint64_t>(k, v); }},
      {"env.task_variants", size(cfg.env.task_variants)},
      {"env.tag_rollouts", boolean(cfg.env.tag_rollouts)},
      {"env.chain_length", size(cfg.env.chain_length)},
      {"env.branching", size(cfg.env.branching)},
      {"env.prefix_length", size(cfg.env.prefix_length)},
      {"env.distractors", size(cfg.env.distractors)},
      {"env.distractor_noise", real(cfg.env.distractor_noise)},
      {"env.grid_size", size(cfg.env.grid_size)},
      {"env.blocked_column", integer(cfg.env.blocked_column)},
      {"env.key_x", integer(cfg.env.key_x)},
      {"env.key_y", integer(cfg.env.key_y)},
      {"env.door_x", integer(cfg.env.door_x)},
      {"env.door_y", integer(cfg.env.door_y)},
      {"match.mode", [&](const std::string&, const std::string& v) { cfg.match.mode = parse_match_mode(v); }},
      {"match.cosine_threshold", optional_real(cfg.match.cosine_threshold)},
      {"match.action_threshold", optional_real(cfg.match.action_threshold)},
      {"match.normalize_whitespace", boolean(cfg.match.normalize_whitespace)},
      {"match.case_fold", boolean(cfg.match.case_fold)},
  };

  for (const auto& [key, value] : values) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key + ": unknown configuration key");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::render(const TrainConfig& cfg) {
  std::string seeds;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(cfg.seeds[i]);
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream out;
  out << "[train]\n"
      << "estimator = " << to_string(cfg.estimator) << "\n"
      << "use_salt = " << b(cfg.use_salt) << "\n"
      << "group_size = " << cfg.group_size << "\n"
      << "history_len = " << cfg.history_len << "\n"
      << "policy_window = " << cfg.policy_window << "\n"
      << "clip_eps = " << fmt(cfg.clip_eps) << "\n"
      << "kl_coeff = " << fmt(cfg.kl_coeff) << "\n"
      << "learning_rate = " << fmt(cfg.learning_rate) << "\n"
      << "temperature = " << fmt(cfg.temperature) << "\n"
      << "eval_temperature = " << fmt(cfg.eval_temperature) << "\n"
      << "updates = " << cfg.updates << "\n"
      << "groups_per_update = " << cfg.groups_per_update << "\n"
      << "eval_interval = " << cfg.eval_interval << "\n"
      << "eval_episodes = " << cfg.eval_episodes << "\n"
      << "skip_degenerate = " << b(cfg.skip_degenerate) << "\n"
      << "seeds = " << seeds << "\n\n"
      << "[env]\n"
      << "kind = " << to_string(cfg.env.kind) << "\n"
      << "horizon = " << cfg.env.horizon << "\n"
      << "seed = " << cfg.env.seed << "\n"
      << "task_variants = " << cfg.env.task_variants << "\n"
      << "tag_rollouts = " << b(cfg.env.tag_rollouts) << "\n"
      << "chain_length = " << cfg.env.chain_length << "\n"
      << "branching = " << cfg.env.branching << "\n"
      << "prefix_length = " << cfg.env.prefix_length << "\n"
      << "distractors = " << cfg.env.distractors << "\n"
      << "distractor_noise = " << fmt(cfg.env.distractor_noise) << "\n"
      << "grid_size = " << cfg.env.grid_size << "\n"
      << "blocked_column = " << cfg.env.blocked_column << "\n"
      << "key_x = " << cfg.env.key_x << "\n"
      << "key_y = " << cfg.env.key_y << "\n"
      << "door_x = " << cfg.env.door_x << "\n"
      << "door_y = " << cfg.env.door_y << "\n\n"
      << "[match]\n"
      << "mode = " << to_string(cfg.match.mode) << "\n";
  if (cfg.match.cosine_threshold) out << "cosine_threshold = " << fmt(*cfg.match.cosine_threshold) << "\n";
  if (cfg.match.action_threshold) out << "action_threshold = " << fmt(*cfg.match.action_threshold) << "\n";
  out << "normalize_whitespace = " << b(cfg.match.normalize_whitespace) << "\n"
      << "case_fold = " << b(cfg.match.case_fold) << "\n";
  return out.str();
}

}  // namespace stepsalt
