#pragma once

// Process-level trajectory metrics: step success, deviation recovery,
// repetitiveness, declared-vs-executed element accuracy and keyword-based
// partial success, plus run-outcome classification and corpus aggregation.
// Every per-task score is optional: not-applicable tasks are excluded from
// means and counted separately, never silently zeroed.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "traceval/core.hpp"
#include "traceval/judge.hpp"

namespace traceval::metrics {

struct Limits {
  int max_steps = 30;   // transition budget per episode
  int max_repeat = 3;   // same action more than this many times in a row
  int max_invalid = 3;  // consecutive unparseable/failed actions

  void validate() const {
    if (max_steps < 1 || max_repeat < 1 || max_invalid < 1)
      throw std::invalid_argument("limits must be >= 1");
  }
};

enum class RepetitionMode {
  AllRunMembers,     // every member of a >=2 run counts (default)
  RunSuccessorsOnly  // only the repeats after the first occurrence count
};

enum class OutcomeKind { NA, EarlyStop, ProducedAnswer };

enum class EarlyStopReason { RepeatLimit, InvalidLimit, StepLimit };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::NA: return "na";
    case OutcomeKind::EarlyStop: return "early_stop";
    case OutcomeKind::ProducedAnswer: return "produced_answer";
  }
  return "na";
}

inline const char* to_string(EarlyStopReason r) {
  switch (r) {
    case EarlyStopReason::RepeatLimit: return "repeat_limit";
    case EarlyStopReason::InvalidLimit: return "invalid_limit";
    case EarlyStopReason::StepLimit: return "step_limit";
  }
  return "step_limit";
}

struct OutcomeClass {
  OutcomeKind kind = OutcomeKind::NA;
  std::optional<EarlyStopReason> reason;  // set iff kind == EarlyStop
  bool operator==(const OutcomeClass&) const = default;
};

struct StepSuccess {
  std::optional<double> score;  // matched gold steps / |gold|
  MatchResult match;
};

struct DeviationIncident {
  int first_step = 0;  // agent step indices, 1-based inclusive
  int last_step = 0;
  bool recovered = false;
  std::optional<int> recovery_step;  // agent step that rejoined the gold path
  std::optional<int> matched_gold;   // gold step it rejoined at
};

struct Recovery {
  std::optional<double> score;  // recoveries / incidents; n/a without incidents
  int incidents = 0;
  int recoveries = 0;
  std::vector<DeviationIncident> log;
};

struct Repetitiveness {
  std::optional<double> score;  // 1 - repeated / |steps|
  int repeated = 0;
  std::vector<RepetitionRun> runs;
};

struct ElementAccuracy {
  std::optional<double> score;  // agreements / considered
  double coverage = 0.0;        // steps with declared intent / |steps|
  int considered = 0;
  int agreements = 0;
};

struct PartialSuccess {
  std::optional<double> score;  // satisfied requirements / |requirements|
  std::map<std::string, bool> satisfied;
};

// Step success: align gold against agent with the judge's greedy matcher.
// Not applicable without a non-empty gold trajectory; an empty agent
// trajectory scores 0.
inline StepSuccess step_success_rate(const TrajectoryBundle& bundle,
                                     const Judge& judge) {
  StepSuccess out;
  if (!bundle.gold || bundle.gold->steps.empty()) return out;
  out.match = judge.match_trajectories(*bundle.gold, bundle.actual);
  out.score =
      double(out.match.pairs.size()) / double(bundle.gold->steps.size());
  return out;
}

// Deviation/recovery walk: a gold cursor advances through the reference
// trajectory; an agent step that matches neither the pending gold step nor
// any of the next lookahead-1 steps opens (or extends) a deviation
// incident; a later within-window match closes it as one recovery and moves
// the cursor past the matched step. The walk ends when gold is exhausted.
// Tasks with zero deviations are not applicable rather than perfect.
inline Recovery recovery_rate(const TrajectoryBundle& bundle,
                              const Judge& judge, int lookahead = 5) {
  if (lookahead < 1) throw std::invalid_argument("lookahead must be >= 1");
  Recovery out;
  if (!bundle.gold || bundle.gold->steps.empty()) return out;

  const auto& gold = bundle.gold->steps;
  const auto& agent = bundle.actual.steps;
  size_t pending = 0;
  bool open = false;

  for (size_t i = 0; i < agent.size(); ++i) {
    if (pending >= gold.size()) break;
    int hit = -1;
    for (int w = 0; w < lookahead && pending + size_t(w) < gold.size(); ++w) {
      if (judge
              .equivalent(gold[pending + size_t(w)].executed_action,
                          agent[i].executed_action)
              .equivalent) {
        hit = int(pending) + w;
        break;
      }
    }
    if (hit >= 0) {
      if (open) {
        open = false;
        ++out.recoveries;
        out.log.back().recovered = true;
        out.log.back().recovery_step = int(i + 1);
        out.log.back().matched_gold = hit + 1;
      }
      pending = size_t(hit) + 1;
    } else {
      if (!open) {
        open = true;
        ++out.incidents;
        out.log.push_back({int(i + 1), int(i + 1), false, std::nullopt,
                           std::nullopt});
      } else {
        out.log.back().last_step = int(i + 1);
      }
    }
  }
  if (out.incidents > 0)
    out.score = double(out.recoveries) / double(out.incidents);
  return out;
}

// Repetitiveness: 1 - repeated/|steps| over the actual trajectory. The
// default mode counts every member of a run of consecutive equivalent
// actions; the literal mode counts only the repeats after the first.
inline Repetitiveness repetitiveness_rate(
    const TrajectoryBundle& bundle, const Judge& judge,
    RepetitionMode mode = RepetitionMode::AllRunMembers) {
  Repetitiveness out;
  const size_t n = bundle.actual.steps.size();
  if (n == 0) return out;
  RepetitionReport report = judge.detect_repetitions(bundle.actual);
  out.runs = report.runs;
  if (mode == RepetitionMode::AllRunMembers) {
    out.repeated = report.count;
  } else {
    for (const RepetitionRun& r : report.runs)
      out.repeated += r.last - r.first;  // len - 1
  }
  out.score = 1.0 - double(out.repeated) / double(n);
  return out;
}

// Element accuracy: did the executed action hit the element the agent said
// it would act on? By default only steps that declare an intent count (the
// coverage field reports how many did); strict mode scores every step and
// treats a missing declaration as a mismatch. A failed execution (None)
// never agrees with a declared intent.
inline ElementAccuracy element_accuracy_rate(const TrajectoryBundle& bundle,
                                             const Judge& judge,
                                             bool strict = false) {
  ElementAccuracy out;
  const auto& steps = bundle.actual.steps;
  if (steps.empty()) return out;
  int declared = 0;
  for (const Step& s : steps) {
    if (s.declared_intent) {
      ++declared;
      if (judge.equivalent(*s.declared_intent, s.executed_action).equivalent)
        ++out.agreements;
    }
  }
  out.coverage = double(declared) / double(steps.size());
  out.considered = strict ? int(steps.size()) : declared;
  if (out.considered > 0)
    out.score = double(out.agreements) / double(out.considered);
  return out;
}

// Partial success over answer requirements; only defined for tasks with at
// least two requirements. No final answer means nothing is satisfied.
inline PartialSuccess partial_success_rate(const TrajectoryBundle& bundle,
                                           const Judge& judge) {
  PartialSuccess out;
  const auto& reqs = bundle.task.requirements;
  if (!bundle.task.is_req_task()) return out;
  if (!bundle.actual.final_answer) {
    out.score = 0.0;
    for (const std::string& r : reqs) out.satisfied[r] = false;
    return out;
  }
  out.satisfied = judge.keyword_satisfaction(*bundle.actual.final_answer, reqs);
  int hit = 0;
  for (const auto& [_, ok] : out.satisfied)
    if (ok) ++hit;
  out.score = double(hit) / double(reqs.size());
  return out;
}

// Outcome classification mirrors the runner's halt logic and uses the
// deterministic matcher (limits are mechanical, not semantic). Precedence
// when several limits would fire: repeat, invalid, step, then the Stop
// rules. A terminal Stop whose answer normalizes to "n/a", or a trajectory
// that simply ends with no Stop and no limit, classifies as NA.
inline OutcomeClass classify_outcome(const TrajectoryBundle& bundle,
                                     const Limits& limits = {}) {
  limits.validate();
  const std::vector<Action> actions = bundle.actual.actions();

  RepetitionReport runs =
      repetition_runs(actions, deterministic_action_match);
  for (const RepetitionRun& r : runs.runs)
    if (r.last - r.first + 1 > limits.max_repeat)
      return {OutcomeKind::EarlyStop, EarlyStopReason::RepeatLimit};

  int none_streak = 0;
  for (const Action& a : actions) {
    none_streak = a.kind == ActionKind::None ? none_streak + 1 : 0;
    if (none_streak >= limits.max_invalid)
      return {OutcomeKind::EarlyStop, EarlyStopReason::InvalidLimit};
  }

  const Action* stop = bundle.actual.terminal_stop();
  if (!stop && int(actions.size()) >= limits.max_steps)
    return {OutcomeKind::EarlyStop, EarlyStopReason::StepLimit};

  if (!stop) return {OutcomeKind::NA, std::nullopt};
  if (normalize_text(stop->payload.value_or("")) == "n/a")
    return {OutcomeKind::NA, std::nullopt};
  return {OutcomeKind::ProducedAnswer, std::nullopt};
}

struct ScoringConfig {
  Limits limits;
  int lookahead = 5;
  RepetitionMode repetition_mode = RepetitionMode::AllRunMembers;
  bool element_strict = false;
};

struct TaskScores {
  int64_t task_id = 0;
  Domain domain = Domain::Synthetic;
  std::optional<double> step_success;
  std::optional<double> recovery;
  std::optional<double> repetitiveness;
  std::optional<double> element_accuracy;
  std::optional<double> partial_success;
  int deviation_incidents = 0;
  int recoveries = 0;
  size_t gold_len = 0;
  size_t agent_len = 0;
  OutcomeClass outcome;
  bool has_gold = false;
  double element_coverage = 0.0;
};

inline TaskScores score_task(const TrajectoryBundle& bundle, const Judge& judge,
                             const ScoringConfig& cfg = {}) {
  TaskScores s;
  s.task_id = bundle.task.task_id;
  s.domain = bundle.task.domain;
  s.has_gold = bundle.gold.has_value();
  s.gold_len = bundle.gold ? bundle.gold->steps.size() : 0;
  s.agent_len = bundle.actual.steps.size();

  s.step_success = step_success_rate(bundle, judge).score;
  Recovery rec = recovery_rate(bundle, judge, cfg.lookahead);
  s.recovery = rec.score;
  s.deviation_incidents = rec.incidents;
  s.recoveries = rec.recoveries;
  s.repetitiveness =
      repetitiveness_rate(bundle, judge, cfg.repetition_mode).score;
  ElementAccuracy ea =
      element_accuracy_rate(bundle, judge, cfg.element_strict);
  s.element_accuracy = ea.score;
  s.element_coverage = ea.coverage;
  s.partial_success = partial_success_rate(bundle, judge).score;
  s.outcome = classify_outcome(bundle, cfg.limits);
  return s;
}

// -------- aggregation --------

constexpr int kMetricCount = 5;

inline const char* metric_display_name(int metric) {
  switch (metric) {
    case 0: return "Step Success Rate";
    case 1: return "Recovery Rate";
    case 2: return "Repetitiveness Rate";
    case 3: return "Element Accuracy Rate";
    case 4: return "Partial Success Rate";
  }
  return "";
}

inline std::optional<double> metric_value(const TaskScores& s, int metric) {
  switch (metric) {
    case 0: return s.step_success;
    case 1: return s.recovery;
    case 2: return s.repetitiveness;
    case 3: return s.element_accuracy;
    case 4: return s.partial_success;
  }
  return std::nullopt;
}

struct MetricAggregate {
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  int applicable = 0;
  int not_applicable = 0;
};

struct DomainRow {
  Domain domain = Domain::Synthetic;
  int tasks = 0;
  double answered_rate = 0.0;  // fraction classified ProducedAnswer
  std::array<std::optional<double>, kMetricCount> metric_means;
};

struct StepLengthStats {
  int gold_tasks = 0;
  double gold_mean = 0.0;
  double gold_sd = 0.0;
  int agent_tasks = 0;
  double agent_mean = 0.0;
  double agent_sd = 0.0;
};

struct OutcomeTally {
  int na = 0;
  int produced_answer = 0;
  int early_stop = 0;
  int repeat_limit = 0;
  int invalid_limit = 0;
  int step_limit = 0;
  int sum = 0;
  double legitimate_rate = 0.0;  // (na + produced) / sum
};

struct MetricReport {
  std::vector<TaskScores> per_task;
  std::vector<MetricAggregate> aggregates;  // one per metric, fixed order
  std::vector<DomainRow> domains;           // fixed domain order, present only
  StepLengthStats steps;
  OutcomeTally outcomes;
};

namespace detail {

struct Accumulator {
  std::vector<double> values;
  void add(std::optional<double> v) {
    if (v) values.push_back(*v);
  }
  double mean() const {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / double(values.size());
  }
  double sd() const {
    if (values.empty()) return 0.0;
    const double m = mean();
    double sq = 0.0;
    for (double v : values) sq += (v - m) * (v - m);
    return std::sqrt(sq / double(values.size()));
  }
};

}  // namespace detail

inline MetricReport aggregate(std::vector<TaskScores> per_task) {
  MetricReport report;
  report.per_task = std::move(per_task);
  const auto& tasks = report.per_task;

  for (int m = 0; m < kMetricCount; ++m) {
    detail::Accumulator acc;
    int na = 0;
    for (const TaskScores& t : tasks) {
      std::optional<double> v = metric_value(t, m);
      if (v) acc.add(v);
      else ++na;
    }
    MetricAggregate agg;
    agg.metric = metric_display_name(m);
    agg.mean = acc.mean();
    agg.sd = acc.sd();
    agg.applicable = int(acc.values.size());
    agg.not_applicable = na;
    report.aggregates.push_back(std::move(agg));
  }

  for (Domain d : kAllDomains) {
    DomainRow row;
    row.domain = d;
    int answered = 0;
    std::array<detail::Accumulator, kMetricCount> accs;
    for (const TaskScores& t : tasks) {
      if (t.domain != d) continue;
      ++row.tasks;
      if (t.outcome.kind == OutcomeKind::ProducedAnswer) ++answered;
      for (int m = 0; m < kMetricCount; ++m) accs[size_t(m)].add(metric_value(t, m));
    }
    if (row.tasks == 0) continue;
    row.answered_rate = double(answered) / double(row.tasks);
    for (int m = 0; m < kMetricCount; ++m)
      if (!accs[size_t(m)].values.empty())
        row.metric_means[size_t(m)] = accs[size_t(m)].mean();
    report.domains.push_back(std::move(row));
  }

  detail::Accumulator gold_lens, agent_lens;
  for (const TaskScores& t : tasks) {
    if (t.has_gold) gold_lens.values.push_back(double(t.gold_len));
    agent_lens.values.push_back(double(t.agent_len));
  }
  report.steps.gold_tasks = int(gold_lens.values.size());
  report.steps.gold_mean = gold_lens.mean();
  report.steps.gold_sd = gold_lens.sd();
  report.steps.agent_tasks = int(agent_lens.values.size());
  report.steps.agent_mean = agent_lens.mean();
  report.steps.agent_sd = agent_lens.sd();

  for (const TaskScores& t : tasks) {
    switch (t.outcome.kind) {
      case OutcomeKind::NA: ++report.outcomes.na; break;
      case OutcomeKind::ProducedAnswer: ++report.outcomes.produced_answer; break;
      case OutcomeKind::EarlyStop:
        ++report.outcomes.early_stop;
        if (t.outcome.reason) {
          switch (*t.outcome.reason) {
            case EarlyStopReason::RepeatLimit: ++report.outcomes.repeat_limit; break;
            case EarlyStopReason::InvalidLimit: ++report.outcomes.invalid_limit; break;
            case EarlyStopReason::StepLimit: ++report.outcomes.step_limit; break;
          }
        }
        break;
    }
  }
  report.outcomes.sum = int(tasks.size());
  if (report.outcomes.sum > 0)
    report.outcomes.legitimate_rate =
        double(report.outcomes.na + report.outcomes.produced_answer) /
        double(report.outcomes.sum);
  return report;
}

}  // namespace traceval::metrics
