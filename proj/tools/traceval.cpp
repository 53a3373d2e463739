// Command line front end. All real work lives in traceval/pipeline.hpp;
// this file only maps flags onto a RunConfig and dispatches.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "traceval/pipeline.hpp"

namespace {

void add_limit_options(CLI::App* cmd, traceval::pipeline::RunConfig& cfg) {
  cmd->add_option("--max-steps", cfg.scoring.limits.max_steps,
                  "Step budget per episode")
      ->capture_default_str();
  cmd->add_option("--max-repeat", cfg.scoring.limits.max_repeat,
                  "Consecutive identical actions allowed")
      ->capture_default_str();
  cmd->add_option("--max-invalid", cfg.scoring.limits.max_invalid,
                  "Consecutive invalid actions allowed")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory evaluation and planning-paradigm simulation"};
  app.require_subcommand(1);

  traceval::pipeline::RunConfig cfg;
  std::string judge_backend = "deterministic";
  std::string repetition_mode = "all";
  bool replan = false;
  bool element_strict = false;

  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate agent trajectories from "
                                     "scenarios or the synthetic corpus");
  simulate->add_option("--out", cfg.output, "Trace JSONL to write")
      ->required();
  simulate->add_option("--scenarios", cfg.scenario_dir,
                       "Directory of scenario JSON files");
  simulate->add_option("--synthetic", cfg.synthetic_count,
                       "Synthetic corpus size when no scenario dir is given")
      ->capture_default_str();
  simulate->add_option("--seed", cfg.seed, "Corpus and policy seed")
      ->capture_default_str();
  simulate->add_flag("--perturb", cfg.perturb,
                     "Use the plan-perturbation corpus profiles");
  simulate->add_option("--paradigm", cfg.paradigm_override,
                       "Force a paradigm: full_plan, step_by_step, "
                       "tree_search");
  simulate->add_flag("--replan", replan,
                     "Allow one replan after a plan divergence");
  add_limit_options(simulate, cfg);

  CLI::App* ingest =
      app.add_subcommand("ingest", "Parse serialized agent logs into a "
                                   "trace file");
  ingest->add_option("--logs", cfg.input, "Directory of .log/.txt agent logs")
      ->required();
  ingest->add_option("--out", cfg.output, "Trace JSONL to write")->required();
  ingest->add_option("--tasks", cfg.tasks_file, "Task spec JSONL to join");
  ingest->add_option("--gold", cfg.gold_file,
                     "Reference trajectory JSONL to join");
  ingest->add_flag("--lenient", cfg.lenient,
                   "Skip unparseable files and record diagnostics");
  ingest->add_option("--step-delimiter", cfg.markup.step_delimiter,
                     "Line prefix that starts a step block")
      ->capture_default_str();
  ingest->add_option("--previous-marker", cfg.markup.previous_marker,
                     "Previous-action field marker")
      ->capture_default_str();
  ingest->add_option("--reasoning-marker", cfg.markup.reasoning_marker,
                     "Reasoning field marker")
      ->capture_default_str();
  ingest->add_option("--metadata-marker", cfg.markup.metadata_marker,
                     "Metadata field marker")
      ->capture_default_str();
  ingest->add_option("--next-marker", cfg.markup.next_marker,
                     "Next-action field marker")
      ->capture_default_str();

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score a trace file and write reports");
  evaluate->add_option("--traces", cfg.input, "Trace JSONL to score")
      ->required();
  evaluate->add_option("--out", cfg.output, "Report directory")->required();
  evaluate
      ->add_option("--judge", judge_backend,
                   "Equivalence backend: deterministic or remote")
      ->check(CLI::IsMember({"deterministic", "remote"}))
      ->capture_default_str();
  evaluate->add_option("--endpoint", cfg.judge.endpoint,
                       "Remote judge HTTP endpoint");
  evaluate->add_option("--threshold", cfg.judge.threshold,
                       "Score threshold for equivalence")
      ->capture_default_str();
  evaluate->add_option("--prompt-version", cfg.judge.prompt_version,
                       "Judge prompt version tag")
      ->capture_default_str();
  evaluate->add_option("--max-pair-window", cfg.judge.max_pair_window,
                       "Matching window recorded in judge metadata")
      ->capture_default_str();
  evaluate->add_option("--max-inflight", cfg.judge.max_inflight,
                       "Concurrent remote judge requests")
      ->capture_default_str();
  evaluate->add_option("--model", cfg.judge.model.model,
                       "Remote judge model name")
      ->capture_default_str();
  evaluate->add_option("--lookahead", cfg.scoring.lookahead,
                       "Gold window for deviation recovery")
      ->capture_default_str();
  evaluate
      ->add_option("--repetition-mode", repetition_mode,
                   "Repetition counting: all or successors")
      ->check(CLI::IsMember({"all", "successors"}))
      ->capture_default_str();
  evaluate->add_flag("--element-strict", element_strict,
                     "Count missing declared intents as disagreements");
  evaluate->add_option("--workers", cfg.workers, "Scoring threads")
      ->capture_default_str();
  evaluate->add_option("--format", cfg.format,
                       "Report format: csv, md, json-lines")
      ->check(CLI::IsMember({"csv", "md", "json-lines"}))
      ->capture_default_str();
  add_limit_options(evaluate, cfg);

  CLI::App* report =
      app.add_subcommand("report", "Re-render reports from scores.jsonl");
  report->add_option("--scores", cfg.input,
                     "scores.jsonl file or directory holding it")
      ->required();
  report->add_option("--out", cfg.output,
                     "Report directory (defaults to the scores directory)");
  report->add_option("--format", cfg.format,
                     "Report format: csv, md, json-lines")
      ->check(CLI::IsMember({"csv", "md", "json-lines"}))
      ->capture_default_str();

  CLI::App* verify = app.add_subcommand(
      "verify", "Recompute reports from scores.jsonl and compare bytes");
  verify->add_option("--dir", cfg.input, "Report directory to check")
      ->required();

  CLI11_PARSE(app, argc, argv);

  cfg.judge.backend = judge_backend == "remote"
                          ? traceval::JudgeBackendKind::Remote
                          : traceval::JudgeBackendKind::Deterministic;
  cfg.scoring.repetition_mode =
      repetition_mode == "successors"
          ? traceval::metrics::RepetitionMode::RunSuccessorsOnly
          : traceval::metrics::RepetitionMode::AllRunMembers;
  cfg.scoring.element_strict = element_strict;
  if (simulate->count("--replan")) cfg.replan_override = replan;

  if (*simulate)
    return traceval::pipeline::cmd_simulate(cfg, std::cout, std::cerr);
  if (*ingest) return traceval::pipeline::cmd_ingest(cfg, std::cout, std::cerr);
  if (*evaluate)
    return traceval::pipeline::cmd_evaluate(cfg, std::cout, std::cerr);
  if (*report) return traceval::pipeline::cmd_report(cfg, std::cout, std::cerr);
  if (*verify) return traceval::pipeline::cmd_verify(cfg, std::cout, std::cerr);
  return 1;
}
