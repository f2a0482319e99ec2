// stepsalt: train, refine, analyze, sweep and rollout from the command line.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "stepsalt/errors.hpp"
#include "stepsalt/metrics.hpp"
#include "stepsalt/run_config.hpp"
#include "stepsalt/salt.hpp"
#include "stepsalt/trainer.hpp"
#include "stepsalt/trajectory_log.hpp"

namespace fs = std::filesystem;
using namespace stepsalt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

std::size_t worker_limit() {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("STEPSALT_THREADS");
  if (!env || !*env) return hw;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError("STEPSALT_THREADS: expected a positive integer, got '" + std::string(env) + "'");
  return static_cast<std::size_t>(n);
}

// Runs fn(0..n-1) on up to worker_limit() threads. Each index owns its own
// output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(n, worker_limit());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared option groups

struct ConfigOptions {
  std::string config_path;
  std::vector<std::uint64_t> seeds;

  void add(CLI::App& app) {
    app.add_option("--config", config_path, "Run configuration file")->required();
    app.add_option("--seed", seeds, "Seed(s); overrides train.seeds")->delimiter(',');
    app.allow_extras();
    app.footer("Any configuration key can be overridden as --section.key=value.");
  }

  TrainConfig load(const CLI::App& app) const {
    RunConfig rc = RunConfig::load(config_path);
    for (const auto& extra : app.remaining()) {
      if (!extra.starts_with("--") || extra.find('.') == std::string::npos)
        throw UsageError("unexpected argument '" + extra + "' (overrides look like --section.key=value)");
      rc.set_override(extra);
    }
    TrainConfig cfg = rc.to_train_config();
    if (!seeds.empty()) cfg.seeds = seeds;
    return cfg;
  }
};

struct MatchOptions {
  std::string mode = "exact";
  std::optional<double> threshold;
  std::optional<double> action_threshold;
  bool case_fold = false;
  bool keep_whitespace = false;

  void add(CLI::App& app) {
    app.add_option("--match", mode, "exact or embed")->check(CLI::IsMember({"exact", "embed"}));
    app.add_option("--threshold", threshold, "Cosine threshold (embed mode)");
    app.add_option("--action-threshold", action_threshold, "Cosine threshold for actions (embed mode)");
    app.add_flag("--case-fold", case_fold, "Lowercase texts before matching");
    app.add_flag("--keep-whitespace", keep_whitespace, "Do not collapse whitespace runs");
  }

  MatchConfig build() const {
    MatchConfig cfg;
    cfg.mode = parse_match_mode(mode);
    cfg.cosine_threshold = threshold;
    cfg.action_threshold = action_threshold;
    cfg.case_fold = case_fold;
    cfg.normalize_whitespace = !keep_whitespace;
    cfg.validate();
    return cfg;
  }
};

struct LogInput {
  std::vector<LogRecord> records;
  std::vector<LogGroup> groups;
};

LogInput load_log(const std::string& path, std::optional<std::size_t> group_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  LogInput log;
  log.records = read_log(in);
  if (log.records.empty()) throw UsageError("'" + path + "': log contains no records");
  log.groups = group_records(log.records, group_size);
  return log;
}

// ---------------------------------------------------------------------------
// train

struct ArmResult {
  std::vector<TrainReport> reports;
  std::vector<std::string> checkpoints;
  std::vector<std::string> dots;
};

// DOT view of one fresh group sampled from the trained policy, with its
// refined advantages on the edges.
std::string final_graph(const TrainConfig& cfg, const Policy& policy, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9a4f));
  const Group g = broadcast_group_advantages(
      rollout_group(policy, cfg.env, cfg.group_size, derive_seed(seed, 0x9a50), rng,
                    RolloutOptions{cfg.policy_window, cfg.match, cfg.temperature}),
      cfg.estimator);
  const TrajGraph graph = build_graph(g, cfg.history_len, cfg.match);
  const auto adv = cfg.use_salt ? refine(graph, g) : current_advantages(g);
  return export_dot(graph, group_values(graph, adv));
}

ArmResult run_arm(const TrainConfig& cfg) {
  ArmResult r;
  const std::size_t n = cfg.seeds.size();
  r.reports.resize(n);
  r.checkpoints.resize(n);
  r.dots.resize(n);
  parallel_for(n, [&](std::size_t i) {
    TrainRun run = train_run(cfg, cfg.seeds[i]);
    r.dots[i] = final_graph(cfg, run.policy, cfg.seeds[i]);
    r.checkpoints[i] = run.policy.to_checkpoint();
    r.reports[i] = std::move(run.report);
  });
  return r;
}

void write_arm(const fs::path& dir, const TrainConfig& cfg, const ArmResult& r) {
  std::string ndjson;
  for (const auto& rep : r.reports) ndjson += report_to_ndjson(rep);
  write_file(dir / "report.ndjson", ndjson);
  write_file(dir / "summary.csv", reports_to_csv(r.reports));
  write_file(dir / "config.cfg", RunConfig::render(cfg));
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const std::string stem = "seed-" + std::to_string(cfg.seeds[i]);
    write_file(dir / "checkpoints" / (stem + ".json"), r.checkpoints[i]);
    write_file(dir / "graphs" / (stem + ".dot"), r.dots[i]);
  }
}

double mean_final(const ArmResult& r) {
  double s = 0.0;
  for (const auto& rep : r.reports) s += rep.final_success_rate;
  return s / static_cast<double>(r.reports.size());
}

int cmd_train(const CLI::App& app, const ConfigOptions& opts, const std::string& out, bool compare) {
  TrainConfig cfg = opts.load(app);
  const fs::path dir(out);
  if (!compare) {
    const ArmResult r = run_arm(cfg);
    write_arm(dir, cfg, r);
    std::cout << "mean final success " << mean_final(r) << " over " << r.reports.size() << " seed(s); wrote "
              << dir.string() << "\n";
    return 0;
  }

  TrainConfig salt = cfg, baseline = cfg;
  salt.use_salt = true;
  baseline.use_salt = false;
  const ArmResult rs = run_arm(salt);
  const ArmResult rb = run_arm(baseline);
  write_arm(dir / "salt", salt, rs);
  write_arm(dir / "baseline", baseline, rb);

  nlohmann::ordered_json manifest;
  manifest["seeds"] = cfg.seeds;
  manifest["arms"] = {{{"name", "salt"}, {"use_salt", true}, {"dir", "salt"}},
                      {{"name", "baseline"}, {"use_salt", false}, {"dir", "baseline"}}};
  write_file(dir / "seeds.json", manifest.dump(2) + "\n");

  std::string csv = "seed,salt_final_success_rate,baseline_final_success_rate\n";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    std::ostringstream row;
    row << cfg.seeds[i] << "," << rs.reports[i].final_success_rate << "," << rb.reports[i].final_success_rate << "\n";
    csv += row.str();
  }
  write_file(dir / "comparison.csv", csv);
  std::cout << "mean final success: salt " << mean_final(rs) << ", baseline " << mean_final(rb) << "; wrote "
            << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// refine

int cmd_refine(const std::string& input, const std::string& output, std::size_t h, const MatchOptions& match_opts,
               std::optional<std::size_t> group_size) {
  const MatchConfig match = match_opts.build();
  LogInput log = load_log(input, group_size);
  std::vector<std::string> lines(log.records.size());
  std::size_t merged = 0, ops = 0;
  for (const auto& lg : log.groups) {
    for (std::size_t i = 0; i < lg.group.size(); ++i)
      if (!lg.group[i].has_advantages())
        throw DataError("line " + std::to_string(log.records[lg.record_indices[i]].line) + ": group `" +
                        lg.group_id + "`: record has no advantages");
    const TrajGraph graph = build_graph(lg.group, h, match);
    merged += graph.merge_ops;
    ops += graph.edge_count();
    const RefinedAdvantages refined = refine(graph, lg.group);
    for (std::size_t i = 0; i < lg.group.size(); ++i) {
      const LogRecord& rec = log.records[lg.record_indices[i]];
      Trajectory t = rec.traj;
      t.advantages = refined.per_traj[i];
      lines[lg.record_indices[i]] = write_trajectory_record(t, rec.declared_group_size);
    }
  }
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  if (output == "-")
    std::cout << text;
  else
    write_file(output, text);
  std::cerr << "refined " << log.groups.size() << " group(s), " << log.records.size() << " record(s); merge rate "
            << aggregate_merge_rate(merged, ops) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

std::string dot_file_name(std::size_t index, const std::string& group_id) {
  std::string safe;
  for (char c : group_id) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%04zu_", index);
  return prefix + safe + ".dot";
}

int cmd_analyze(const std::string& input, const std::string& output, std::size_t h, const MatchOptions& match_opts,
                std::optional<std::size_t> group_size, const std::string& dot_dir, bool conflicts) {
  const MatchConfig match = match_opts.build();
  const LogInput log = load_log(input, group_size);
  std::string text;
  std::size_t merged = 0, ops = 0, total_conflicts = 0;
  for (std::size_t gi = 0; gi < log.groups.size(); ++gi) {
    const LogGroup& lg = log.groups[gi];
    const TrajGraph graph = build_graph(lg.group, h, match);
    const GraphStats st = graph_stats(graph);
    merged += st.merge_ops;
    ops += st.merge_ops + st.diverge_ops;

    bool has_adv = true;
    for (const auto& t : lg.group.trajectories()) has_adv &= t.has_advantages();

    nlohmann::ordered_json rec;
    rec["group_id"] = lg.group_id;
    rec["h"] = st.h;
    rec["merge_ops"] = st.merge_ops;
    rec["diverge_ops"] = st.diverge_ops;
    rec["merge_rate"] = st.merge_rate;
    rec["n_groups"] = st.n_groups;
    if (conflicts) {
      if (!has_adv) throw DataError("group `" + lg.group_id + "`: --conflicts needs advantages on every record");
      const ConflictReport cr = conflict_groups(graph, lg.group);
      total_conflicts += cr.count;
      rec["conflicts"] = cr.count;
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (std::size_t idx : cr.group_indices) {
        const MergeGroup& mg = graph.groups[idx];
        nlohmann::ordered_json item;
        item["merge_group"] = idx;
        item["action"] = mg.representative().action;
        nlohmann::ordered_json members = nlohmann::ordered_json::array();
        for (const auto& m : mg.members) {
          nlohmann::ordered_json mj;
          mj["traj_id"] = lg.group[m.traj_index].traj_id;
          mj["step"] = m.step_index;
          mj["advantage"] = (*lg.group[m.traj_index].advantages)[m.step_index];
          members.push_back(std::move(mj));
        }
        item["members"] = std::move(members);
        list.push_back(std::move(item));
      }
      rec["conflict_groups"] = std::move(list);
    }
    text += rec.dump() + "\n";

    if (!dot_dir.empty()) {
      const std::vector<double> values =
          has_adv ? group_values(graph, refine(graph, lg.group)) : std::vector<double>{};
      write_file(fs::path(dot_dir) / dot_file_name(gi, lg.group_id), export_dot(graph, values));
    }
  }
  if (output == "-")
    std::cout << text;
  else
    write_file(output, text);
  std::cerr << log.groups.size() << " group(s); merge rate " << aggregate_merge_rate(merged, ops);
  if (conflicts) std::cerr << "; " << total_conflicts << " conflict group(s)";
  std::cerr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const CLI::App& app, const ConfigOptions& opts, const std::string& axis,
              const std::vector<std::size_t>& values, const std::string& out) {
  const TrainConfig base = opts.load(app);
  if (values.empty()) throw UsageError("--values: at least one value is required");
  std::vector<TrainConfig> arms;
  for (std::size_t v : values) {
    TrainConfig cfg = base;
    (axis == "history_len" ? cfg.history_len : cfg.group_size) = v;
    cfg.validate();
    arms.push_back(cfg);
  }

  // One job per (value, seed) so every core stays busy.
  const std::size_t n_seeds = base.seeds.size();
  std::vector<std::optional<TrainRun>> slots(arms.size() * n_seeds);
  parallel_for(slots.size(), [&](std::size_t j) {
    slots[j] = train_run(arms[j / n_seeds], base.seeds[j % n_seeds]);
  });

  const fs::path dir(out);
  std::ostringstream matrix;
  matrix << axis << ",update,success_rate,merge_rate\n";
  std::ostringstream finals;
  finals << axis << ",seed,final_success_rate\n";
  for (std::size_t a = 0; a < arms.size(); ++a) {
    std::vector<TrainReport> reports;
    std::string ndjson;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const TrainRun& run = *slots[a * n_seeds + s];
      reports.push_back(run.report);
      ndjson += report_to_ndjson(run.report);
      write_file(dir / (axis + "=" + std::to_string(values[a])) / "checkpoints" /
                     ("seed-" + std::to_string(base.seeds[s]) + ".json"),
                 run.policy.to_checkpoint());
      finals << values[a] << "," << base.seeds[s] << "," << run.report.final_success_rate << "\n";
    }
    const fs::path arm_dir = dir / (axis + "=" + std::to_string(values[a]));
    write_file(arm_dir / "report.ndjson", ndjson);
    write_file(arm_dir / "summary.csv", reports_to_csv(reports));
    write_file(arm_dir / "config.cfg", RunConfig::render(arms[a]));
    for (std::size_t u = 0; u < arms[a].updates; ++u) {
      double sr = 0.0, mr = 0.0;
      for (const auto& rep : reports) {
        sr += rep.updates[u].success_rate;
        mr += rep.updates[u].merge_rate;
      }
      matrix << values[a] << "," << u << "," << sr / n_seeds << "," << mr / n_seeds << "\n";
    }
  }
  write_file(dir / "sweep.csv", matrix.str());
  write_file(dir / "final.csv", finals.str());
  std::cout << "swept " << axis << " over " << values.size() << " value(s) x " << n_seeds << " seed(s); wrote "
            << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rollout

int cmd_rollout(const CLI::App& app, const ConfigOptions& opts, const std::string& checkpoint,
                std::size_t episodes, const std::string& estimator, const std::string& output) {
  const TrainConfig cfg = opts.load(app);
  Policy policy(action_vocabulary(cfg.env), cfg.temperature);
  if (!checkpoint.empty()) {
    policy = Policy::from_checkpoint(read_file(checkpoint));
    if (policy.actions() != action_vocabulary(cfg.env))
      throw DataError("checkpoint '" + checkpoint + "': action list does not match env." +
                      std::string(to_string(cfg.env.kind)));
  }
  const std::uint64_t seed = cfg.seeds.front();
  Rng rng(derive_seed(seed, 0x2011));
  const RolloutOptions ro{cfg.policy_window, cfg.match, cfg.temperature};
  std::string text;
  for (std::size_t e = 0; e < episodes; ++e) {
    Group g = rollout_group(policy, cfg.env, cfg.group_size, derive_seed(seed, 0x2012, e), rng, ro);
    if (estimator != "none") g = broadcast_group_advantages(g, parse_estimator(estimator));
    for (const auto& line : write_group_records(g)) text += line + "\n";
  }
  if (output == "-")
    std::cout << text;
  else
    write_file(output, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Step-level advantage refinement over trajectory graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stepsalt 0.1.0");

  std::string out = "out";
  bool compare = false;
  ConfigOptions train_cfg;
  auto* train = app.add_subcommand("train", "Train on a synthetic environment");
  train_cfg.add(*train);
  train->add_option("--out", out, "Output directory")->capture_default_str();
  train->add_flag("--compare-baseline", compare, "Also run the baseline arm with the same seeds");

  std::string input, output = "-";
  std::size_t h = 3;
  std::optional<std::size_t> group_size;
  MatchOptions refine_match;
  auto* refine_cmd = app.add_subcommand("refine", "Refine advantages in a trajectory log");
  refine_cmd->add_option("--input", input, "Input log (one JSON record per line)")->required();
  refine_cmd->add_option("--output", output, "Output log, '-' for stdout")->capture_default_str();
  refine_cmd->add_option("--history-len", h, "State window length")->capture_default_str()->check(CLI::PositiveNumber);
  refine_cmd->add_option("--group-size", group_size, "Required number of records per group");
  refine_match.add(*refine_cmd);

  std::string dot_dir;
  bool conflicts = false;
  MatchOptions analyze_match;
  auto* analyze = app.add_subcommand("analyze", "Per-group graph statistics");
  analyze->add_option("--input", input, "Input log")->required();
  analyze->add_option("--output", output, "Statistics output, '-' for stdout")->capture_default_str();
  analyze->add_option("--history-len", h, "State window length")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--group-size", group_size, "Required number of records per group");
  analyze->add_option("--dot", dot_dir, "Write one DOT file per group into this directory");
  analyze->add_flag("--conflicts", conflicts, "List merge groups with mixed-sign advantages");
  analyze_match.add(*analyze);

  ConfigOptions sweep_cfg;
  std::string axis;
  std::vector<std::size_t> values;
  auto* sweep = app.add_subcommand("sweep", "Train across values of one hyperparameter");
  sweep_cfg.add(*sweep);
  sweep->add_option("--axis", axis, "history_len or group_size")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", out, "Output directory")->capture_default_str();

  ConfigOptions rollout_cfg;
  std::string checkpoint, estimator = "grpo";
  std::size_t episodes = 1;
  auto* rollout = app.add_subcommand("rollout", "Sample trajectory groups as a log");
  rollout_cfg.add(*rollout);
  rollout->add_option("--checkpoint", checkpoint, "Policy checkpoint (default: uniform policy)");
  rollout->add_option("--episodes", episodes, "Number of groups")->capture_default_str()->check(CLI::PositiveNumber);
  rollout->add_option("--estimator", estimator, "grpo, rloo or none")
      ->capture_default_str()
      ->check(CLI::IsMember({"grpo", "rloo", "none"}));
  rollout->add_option("--output", output, "Output log, '-' for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(*train, train_cfg, out, compare);
    if (*refine_cmd) return cmd_refine(input, output, h, refine_match, group_size);
    if (*analyze) return cmd_analyze(input, output, h, analyze_match, group_size, dot_dir, conflicts);
    if (*sweep) {
      if (axis != "history_len" && axis != "group_size")
        throw UsageError("--axis: expected history_len or group_size, got '" + axis + "'");
      return cmd_sweep(*sweep, sweep_cfg, axis, values, out);
    }
    if (*rollout) return cmd_rollout(*rollout, rollout_cfg, checkpoint, episodes, estimator, output);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const LogLineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
