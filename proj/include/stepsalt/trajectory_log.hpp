#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stepsalt/core_types.hpp"
#include "stepsalt/errors.hpp"

namespace stepsalt {

// Line-delimited trajectory log. One JSON object per line:
//
//   {"task_id": "...", "group_id": "...", "traj_id": "...", "reward": 1.0,
//    "steps": [{"action": "...", "observation": "..."}, ...],
//    "advantages": [...]}            // optional
//
// Optional extras understood by this reader: "prompt" (defaults to task_id),
// "group_size" (declared size of the group, used for completeness checks) and
// "behavior_probs". Unknown fields are ignored; field order is irrelevant.

/// Parses one record. Throws ParseError naming the offending field for
/// malformed input and SchemaError for invariant violations (zero steps,
/// advantages/steps length mismatch).
Trajectory parse_trajectory_record(std::string_view line);

/// Serializes one record without a trailing newline. Throws
/// SerializationError for a non-finite reward or advantage.
std::string write_trajectory_record(const Trajectory& traj,
                                    std::optional<std::size_t> group_size = std::nullopt);

/// One record of every trajectory in the group, in order.
std::vector<std::string> write_group_records(const Group& group);

/// A parsed record with its 1-based source line.
struct LogRecord {
  std::size_t line = 0;
  Trajectory traj;
  std::optional<std::size_t> declared_group_size;
};

/// Error raised while reading a log; carries the 1-based line number.
class LogLineError : public Error {
 public:
  LogLineError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads every non-blank line. Throws LogLineError on the first bad record.
std::vector<LogRecord> read_log(std::istream& in);

/// A group assembled from log records, in order of first appearance.
struct LogGroup {
  std::string group_id;
  std::vector<std::size_t> record_indices;  // into the read_log result
  Group group;
};

/// Collects records by group_id. Throws SchemaError when members of one
/// group disagree on task_id, and SchemaError naming the group_id when a
/// group's size differs from `expected_size` (or from a declared
/// group_size field).
std::vector<LogGroup> group_records(const std::vector<LogRecord>& records,
                                    std::optional<std::size_t> expected_size = std::nullopt);

}  // namespace stepsalt
