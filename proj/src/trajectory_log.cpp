#include "stepsalt/trajectory_log.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>

namespace stepsalt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(std::string("field `") + field + "`: missing");
  return *it;
}

std::string require_string(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw ParseError(std::string("field `") + field + "`: expected string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ParseError("field `" + field + "`: expected number");
  return v.get<double>();
}

std::vector<double> number_array(const json& v, const std::string& field) {
  if (!v.is_array()) throw ParseError("field `" + field + "`: expected array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

Trajectory parse_trajectory_record(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("record: invalid JSON (") + e.what() + ")");
  }
  if (!obj.is_object()) throw ParseError("record: expected a JSON object");

  Trajectory traj;
  traj.task.id = require_string(obj, "task_id");
  traj.group_id = require_string(obj, "group_id");
  traj.traj_id = require_string(obj, "traj_id");
  traj.task.prompt = obj.contains("prompt") ? require_string(obj, "prompt") : traj.task.id;
  traj.reward = as_number(require(obj, "reward"), "reward");

  const json& steps = require(obj, "steps");
  if (!steps.is_array()) throw ParseError("field `steps`: expected array");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string where = "steps[" + std::to_string(i) + "]";
    const json& s = steps[i];
    if (!s.is_object()) throw ParseError("field `" + where + "`: expected object");
    auto action = s.find("action");
    if (action == s.end() || !action->is_string())
      throw ParseError("field `" + where + ".action`: expected string");
    std::string observation;
    if (auto obs = s.find("observation"); obs != s.end()) {
      if (!obs->is_string()) throw ParseError("field `" + where + ".observation`: expected string");
      observation = obs->get<std::string>();
    }
    traj.steps.push_back({action->get<std::string>(), std::move(observation)});
  }
  if (auto it = obj.find("advantages"); it != obj.end() && !it->is_null())
    traj.advantages = number_array(*it, "advantages");
  if (auto it = obj.find("behavior_probs"); it != obj.end() && !it->is_null())
    traj.behavior_probs = number_array(*it, "behavior_probs");

  traj.validate();
  return traj;
}

std::string write_trajectory_record(const Trajectory& traj, std::optional<std::size_t> group_size) {
  if (!std::isfinite(traj.reward)) throw SerializationError("reward: not finite");
  ordered_json obj;
  obj["task_id"] = traj.task.id;
  if (traj.task.prompt != traj.task.id) obj["prompt"] = traj.task.prompt;
  obj["group_id"] = traj.group_id;
  obj["traj_id"] = traj.traj_id;
  if (group_size) obj["group_size"] = *group_size;
  obj["reward"] = traj.reward;
  ordered_json steps = ordered_json::array();
  for (const auto& s : traj.steps) steps.push_back({{"action", s.action}, {"observation", s.observation}});
  obj["steps"] = std::move(steps);
  if (traj.advantages) {
    for (double a : *traj.advantages)
      if (!std::isfinite(a)) throw SerializationError("advantages: not finite");
    obj["advantages"] = *traj.advantages;
  }
  if (!traj.behavior_probs.empty()) obj["behavior_probs"] = traj.behavior_probs;
  return obj.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::vector<std::string> write_group_records(const Group& group) {
  std::vector<std::string> out;
  out.reserve(group.size());
  for (const auto& t : group.trajectories()) out.push_back(write_trajectory_record(t, group.size()));
  return out;
}

std::vector<LogRecord> read_log(std::istream& in) {
  std::vector<LogRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      LogRecord rec;
      rec.line = line_no;
      rec.traj = parse_trajectory_record(line);
      auto obj = json::parse(line);
      if (auto it = obj.find("group_size"); it != obj.end()) {
        if (!it->is_number_unsigned()) throw ParseError("field `group_size`: expected non-negative integer");
        rec.declared_group_size = it->get<std::size_t>();
      }
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      throw LogLineError(line_no, e.what());
    }
  }
  return out;
}

std::vector<LogGroup> group_records(const std::vector<LogRecord>& records,
                                    std::optional<std::size_t> expected_size) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& gid = records[i].traj.group_id;
    auto [it, inserted] = members.try_emplace(gid);
    if (inserted) order.push_back(gid);
    it->second.push_back(i);
  }

  std::vector<LogGroup> out;
  out.reserve(order.size());
  for (const auto& gid : order) {
    const auto& idx = members[gid];
    std::optional<std::size_t> want = expected_size;
    for (auto i : idx) {
      if (auto declared = records[i].declared_group_size) {
        if (want && *want != *declared)
          throw SchemaError("group `" + gid + "`: conflicting group_size declarations");
        want = declared;
      }
    }
    if (want && idx.size() != *want) {
      throw SchemaError("group `" + gid + "`: incomplete, found " + std::to_string(idx.size()) +
                        " of " + std::to_string(*want) + " trajectories");
    }
    std::vector<Trajectory> trajs;
    trajs.reserve(idx.size());
    for (auto i : idx) trajs.push_back(records[i].traj);
    const Task task = trajs.front().task;
    try {
      out.push_back({gid, idx, Group(task, std::move(trajs))});
    } catch (const SchemaError& e) {
      throw SchemaError("group `" + gid + "`: " + e.what());
    }
  }
  return out;
}

}  // namespace stepsalt
