#pragma once

// Command implementations behind the CLI. Each cmd_* takes the parsed run
// configuration plus output streams and returns a process exit code, so the
// binary stays a thin argument parser and tests can drive commands
// in-process.

#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "traceval/core.hpp"
#include "traceval/dataset.hpp"
#include "traceval/grammar.hpp"
#include "traceval/judge.hpp"
#include "traceval/metrics.hpp"
#include "traceval/planner.hpp"
#include "traceval/remote.hpp"
#include "traceval/report.hpp"
#include "traceval/serde.hpp"
#include "traceval/sim.hpp"

namespace traceval::pipeline {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  JudgeConfig judge;
  metrics::ScoringConfig scoring;
  grammar::LogMarkup markup;

  std::string input;         // traces file, logs dir, or scores file
  std::string output;        // traces file or report directory
  std::string tasks_file;    // optional task-spec JSONL join
  std::string gold_file;     // optional gold dataset JSONL join
  std::string scenario_dir;  // optional scenario JSON directory
  std::string format = "md";
  bool lenient = false;
  int workers = 1;

  int synthetic_count = 96;
  uint64_t seed = 1;
  std::string paradigm_override;  // empty keeps per-scenario paradigms
  std::optional<bool> replan_override;
  bool perturb = false;
};

namespace detail {

inline std::vector<std::string> sorted_files(const std::string& dir,
                                             std::initializer_list<const char*>
                                                 extensions) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw PipelineError("'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    for (const char* want : extensions)
      if (ext == want) {
        out.push_back(e.path().string());
        break;
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Task ids live in the file name: trailing digits of the stem.
inline std::optional<int64_t> task_id_from_filename(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  size_t end = stem.size();
  while (end > 0 && std::isdigit((unsigned char)stem[end - 1])) --end;
  if (end == stem.size()) return std::nullopt;
  return std::stoll(stem.substr(end));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace detail

// Score bundles, optionally across worker threads. Results keep input
// order; worker count only affects wall time, never output.
inline std::vector<metrics::TaskScores> evaluate_bundles(
    const std::vector<TrajectoryBundle>& bundles, const Judge& judge,
    const metrics::ScoringConfig& cfg, int workers = 1) {
  std::vector<metrics::TaskScores> out(bundles.size());
  workers = std::max(1, std::min<int>(workers, (int)bundles.size()));
  if (workers == 1) {
    for (size_t i = 0; i < bundles.size(); ++i)
      out[i] = metrics::score_task(bundles[i], judge, cfg);
    return out;
  }
  std::atomic<size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= bundles.size()) return;
        try {
          out[i] = metrics::score_task(bundles[i], judge, cfg);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

struct IngestDiagnostic {
  std::string file;
  int step_index = 0;
  std::string slot;
  std::string raw;
  std::string expected;
};

inline void to_json(json& j, const IngestDiagnostic& d) {
  j = json{{"file", d.file},
           {"step_index", d.step_index},
           {"slot", d.slot},
           {"raw", d.raw},
           {"expected", d.expected}};
}

// Turn a directory of serialized agent logs into trajectory bundles.
// Reference trajectories and task metadata come from optional JSONL joins;
// tasks without either still evaluate, they just lose the gold-aligned
// metrics.
inline std::vector<TrajectoryBundle> ingest_logs(
    const RunConfig& cfg, std::ostream& err,
    std::vector<IngestDiagnostic>* diagnostics = nullptr) {
  std::map<int64_t, TaskSpec> tasks;
  if (!cfg.tasks_file.empty())
    for (TaskSpec& t : read_jsonl_file<TaskSpec>(cfg.tasks_file))
      tasks[t.task_id] = std::move(t);

  std::map<int64_t, GoldDatasetRecord> gold;
  if (!cfg.gold_file.empty())
    for (GoldDatasetRecord& r : load_gold_dataset(cfg.gold_file))
      gold[r.task_id] = std::move(r);

  std::vector<TrajectoryBundle> bundles;
  for (const std::string& path :
       detail::sorted_files(cfg.input, {".log", ".txt"})) {
    std::optional<int64_t> id = detail::task_id_from_filename(path);
    if (!id) {
      const std::string msg =
          "'" + path + "' has no trailing task number in its name";
      if (!cfg.lenient) throw PipelineError(msg);
      err << "warning: " << msg << ", skipped\n";
      continue;
    }

    grammar::BlocksResult blocks =
        grammar::extract_step_blocks(detail::slurp(path), cfg.markup);
    if (std::holds_alternative<grammar::ParseError>(blocks)) {
      const auto& pe = std::get<grammar::ParseError>(blocks);
      const std::string msg = "'" + path + "': expected " + pe.expected;
      if (!cfg.lenient) throw PipelineError(msg);
      err << "warning: " << msg << ", skipped\n";
      continue;
    }

    grammar::IngestedTrajectory ingested = grammar::blocks_to_trajectory_lenient(
        std::get<std::vector<grammar::RawStepBlock>>(blocks));
    if (diagnostics) {
      for (const grammar::RejectedAction& r : ingested.rejected)
        diagnostics->push_back(IngestDiagnostic{path, r.step_index, r.slot,
                                                r.raw, r.error.expected});
    }

    TrajectoryBundle b;
    b.actual = std::move(ingested.trajectory);

    auto tit = tasks.find(*id);
    auto git = gold.find(*id);
    if (tit != tasks.end()) {
      b.task = tit->second;
    } else if (git != gold.end()) {
      b.task = gold_record_to_task(git->second);
    } else {
      b.task.task_id = *id;
      b.task.intent = "ingested task " + std::to_string(*id);
      b.task.domain = Domain::Synthetic;
    }
    b.task.task_id = *id;

    if (git != gold.end() && !git->second.steps.empty())
      b.gold = gold_record_to_trajectory(git->second);
    else
      err << "note: task " << *id
          << " has no reference trajectory; alignment metrics will be "
             "not applicable\n";

    bundles.push_back(std::move(b));
  }
  return bundles;
}

inline int cmd_ingest(const RunConfig& cfg, std::ostream& out,
                      std::ostream& err) {
  try {
    std::vector<IngestDiagnostic> diagnostics;
    std::vector<TrajectoryBundle> bundles =
        ingest_logs(cfg, err, &diagnostics);
    if (bundles.empty()) throw PipelineError("no logs ingested");
    write_trace_file(cfg.output, bundles);
    if (cfg.lenient && !diagnostics.empty()) {
      const std::string sidecar = cfg.output + ".diagnostics.jsonl";
      write_jsonl_file(sidecar, diagnostics);
      out << "wrote " << diagnostics.size() << " parse diagnostics to "
          << sidecar << "\n";
    }
    out << "ingested " << bundles.size() << " trajectories into " << cfg.output
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out,
                        std::ostream& err) {
  try {
    std::vector<sim::Scenario> scenarios;
    if (!cfg.scenario_dir.empty()) {
      for (const std::string& path :
           detail::sorted_files(cfg.scenario_dir, {".json"}))
        scenarios.push_back(sim::load_scenario(path));
    } else if (cfg.perturb) {
      scenarios = sim::synthesize_perturbed_corpus(cfg.synthetic_count,
                                                   cfg.seed);
    } else {
      scenarios = sim::synthesize_corpus(cfg.synthetic_count, cfg.seed);
    }
    if (scenarios.empty()) throw PipelineError("nothing to simulate");

    std::vector<TrajectoryBundle> bundles;
    bundles.reserve(scenarios.size());
    uint64_t seed_state = cfg.seed;
    for (const sim::Scenario& sc : scenarios) {
      std::vector<std::string> problems =
          sim::validate_graph(sc.graph, sc.task.solvable);
      if (!problems.empty()) {
        std::string msg = "scenario for task " +
                          std::to_string(sc.task.task_id) + " is invalid:";
        for (const std::string& p : problems) msg += "\n  " + p;
        throw PipelineError(msg);
      }
      sim::SimOptions opt;
      opt.limits = cfg.scoring.limits;
      opt.seed = sim::splitmix64(seed_state);
      if (!cfg.paradigm_override.empty())
        opt.paradigm_override = cfg.paradigm_override;
      opt.replan_override = cfg.replan_override;
      bundles.push_back(sim::simulate_scenario(sc, opt));
    }
    write_trace_file(cfg.output, bundles);
    out << "simulated " << bundles.size() << " tasks into " << cfg.output
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& out,
                        std::ostream& err) {
  try {
    std::vector<TrajectoryBundle> bundles = read_trace_file(cfg.input);
    if (bundles.empty()) throw PipelineError("no trajectories in " + cfg.input);
    Judge judge = remote::make_judge(cfg.judge);
    std::vector<metrics::TaskScores> scores =
        evaluate_bundles(bundles, judge, cfg.scoring, cfg.workers);
    metrics::MetricReport rep = metrics::aggregate(std::move(scores));
    report::write_report_files(cfg.output, rep, cfg.format);

    for (const metrics::MetricAggregate& a : rep.aggregates)
      out << a.metric << ": " << report::fmt4(a.mean) << " ± "
          << report::fmt4(a.sd) << " (" << a.applicable << " of "
          << (a.applicable + a.not_applicable) << " applicable)\n";
    out << "legitimate answers: " << report::pct2(rep.outcomes.legitimate_rate)
        << " of " << rep.outcomes.sum << " tasks\n";
    out << "report written to " << cfg.output << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_report(const RunConfig& cfg, std::ostream& out,
                      std::ostream& err) {
  try {
    namespace fs = std::filesystem;
    std::string scores_path = cfg.input;
    if (fs::is_directory(scores_path))
      scores_path = (fs::path(scores_path) / "scores.jsonl").string();
    metrics::MetricReport rep =
        metrics::aggregate(read_scores_file(scores_path));
    const std::string dir =
        cfg.output.empty() ? fs::path(scores_path).parent_path().string()
                           : cfg.output;
    report::write_report_files(dir, rep, cfg.format);
    out << "report written to " << dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out,
                      std::ostream& err) {
  try {
    std::vector<std::string> problems = report::verify_report_dir(cfg.input);
    if (problems.empty()) {
      out << "OK: rendered reports match their recomputation\n";
      return 0;
    }
    for (const std::string& p : problems) err << "mismatch: " << p << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace traceval::pipeline
