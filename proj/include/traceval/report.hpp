#pragma once

// Report rendering. Every number goes through one fixed-width formatter so
// repeated runs over the same scores are byte-identical, which is what the
// verify command checks. CSV is split per section for machine use; the
// Markdown report is a single human-readable file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "traceval/metrics.hpp"
#include "traceval/serde.hpp"

namespace traceval::report {

using metrics::MetricReport;

inline std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string pct2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
  return buf;
}

inline std::string cell(const std::optional<double>& v) {
  return v ? fmt4(*v) : std::string("NA");
}

inline std::string pct_cell(const std::optional<double>& v) {
  return v ? pct2(*v) : std::string("NA");
}

inline std::string outcome_text(const metrics::OutcomeClass& o) {
  std::string out = to_string(o.kind);
  if (o.reason) out += std::string(":") + to_string(*o.reason);
  return out;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void csv_row(std::string& out, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(cells[i]);
  }
  out += '\n';
}

inline void md_row(std::string& out, const std::vector<std::string>& cells) {
  out += '|';
  for (const std::string& c : cells) {
    out += ' ';
    out += c;
    out += " |";
  }
  out += '\n';
}

inline void md_rule(std::string& out, size_t columns) {
  out += '|';
  for (size_t i = 0; i < columns; ++i) out += " --- |";
  out += '\n';
}

}  // namespace detail

// -------- CSV sections --------

inline std::string render_per_task_csv(const MetricReport& r) {
  std::string out;
  detail::csv_row(out, {"task_id", "domain", "outcome", "step_success",
                        "recovery", "repetitiveness", "element_accuracy",
                        "partial_success", "deviation_incidents", "recoveries",
                        "gold_len", "agent_len", "element_coverage"});
  for (const metrics::TaskScores& t : r.per_task) {
    detail::csv_row(
        out, {std::to_string(t.task_id), to_string(t.domain),
              outcome_text(t.outcome), cell(t.step_success), cell(t.recovery),
              cell(t.repetitiveness), cell(t.element_accuracy),
              cell(t.partial_success), std::to_string(t.deviation_incidents),
              std::to_string(t.recoveries), std::to_string(t.gold_len),
              std::to_string(t.agent_len), fmt4(t.element_coverage)});
  }
  return out;
}

inline std::string render_aggregate_csv(const MetricReport& r) {
  std::string out;
  detail::csv_row(out, {"metric", "mean", "sd", "applicable", "not_applicable"});
  for (const metrics::MetricAggregate& a : r.aggregates)
    detail::csv_row(out, {a.metric, fmt4(a.mean), fmt4(a.sd),
                          std::to_string(a.applicable),
                          std::to_string(a.not_applicable)});
  return out;
}

inline std::string render_domains_csv(const MetricReport& r) {
  std::string out;
  detail::csv_row(out, {"domain", "tasks", "answered_rate", "step_success",
                        "recovery", "repetitiveness", "element_accuracy",
                        "partial_success"});
  for (const metrics::DomainRow& d : r.domains) {
    std::vector<std::string> cells = {to_string(d.domain),
                                      std::to_string(d.tasks),
                                      fmt4(d.answered_rate)};
    for (const std::optional<double>& m : d.metric_means)
      cells.push_back(cell(m));
    detail::csv_row(out, cells);
  }
  return out;
}

inline std::string render_steps_csv(const MetricReport& r) {
  std::string out;
  detail::csv_row(out, {"trajectory", "tasks", "mean_steps", "sd"});
  detail::csv_row(out, {"reference", std::to_string(r.steps.gold_tasks),
                        fmt4(r.steps.gold_mean), fmt4(r.steps.gold_sd)});
  detail::csv_row(out, {"agent", std::to_string(r.steps.agent_tasks),
                        fmt4(r.steps.agent_mean), fmt4(r.steps.agent_sd)});
  return out;
}

inline std::string render_outcomes_csv(const MetricReport& r) {
  std::string out;
  detail::csv_row(out, {"outcome", "count"});
  detail::csv_row(out, {"na", std::to_string(r.outcomes.na)});
  detail::csv_row(out,
                  {"produced_answer", std::to_string(r.outcomes.produced_answer)});
  detail::csv_row(out, {"early_stop", std::to_string(r.outcomes.early_stop)});
  detail::csv_row(out,
                  {"early_stop:repeat_limit", std::to_string(r.outcomes.repeat_limit)});
  detail::csv_row(out, {"early_stop:invalid_limit",
                        std::to_string(r.outcomes.invalid_limit)});
  detail::csv_row(out,
                  {"early_stop:step_limit", std::to_string(r.outcomes.step_limit)});
  detail::csv_row(out, {"sum", std::to_string(r.outcomes.sum)});
  detail::csv_row(out, {"legitimate_rate", fmt4(r.outcomes.legitimate_rate)});
  return out;
}

// -------- Markdown --------

inline std::string render_markdown(const MetricReport& r) {
  std::string out = "# Trajectory Evaluation Report\n\n";

  out += "## Process Metrics\n\n";
  detail::md_row(out, {"Metric", "Mean ± SD", "Applicable", "Not Applicable"});
  detail::md_rule(out, 4);
  for (const metrics::MetricAggregate& a : r.aggregates) {
    detail::md_row(out, {a.metric, fmt4(a.mean) + " ± " + fmt4(a.sd),
                         std::to_string(a.applicable),
                         std::to_string(a.not_applicable)});
  }
  out += '\n';

  if (!r.domains.empty()) {
    out += "## Per-Domain Means\n\n";
    std::vector<std::string> head = {"Domain", "Tasks", "Answered"};
    for (int m = 0; m < metrics::kMetricCount; ++m)
      head.push_back(metrics::metric_display_name(m));
    detail::md_row(out, head);
    detail::md_rule(out, head.size());
    for (const metrics::DomainRow& d : r.domains) {
      std::vector<std::string> cells = {display_name(d.domain),
                                        std::to_string(d.tasks),
                                        pct2(d.answered_rate)};
      for (const std::optional<double>& m : d.metric_means)
        cells.push_back(pct_cell(m));
      detail::md_row(out, cells);
    }
    out += '\n';
  }

  out += "## Demonstration Length\n\n";
  detail::md_row(out, {"Trajectory", "Tasks", "Mean Steps", "SD"});
  detail::md_rule(out, 4);
  detail::md_row(out, {"Reference", std::to_string(r.steps.gold_tasks),
                       fmt4(r.steps.gold_mean), fmt4(r.steps.gold_sd)});
  detail::md_row(out, {"Agent", std::to_string(r.steps.agent_tasks),
                       fmt4(r.steps.agent_mean), fmt4(r.steps.agent_sd)});
  out += '\n';

  out += "## Terminal Outcomes\n\n";
  detail::md_row(out, {"Outcome", "Count"});
  detail::md_rule(out, 2);
  detail::md_row(out, {"No answer (N/A)", std::to_string(r.outcomes.na)});
  detail::md_row(out,
                 {"Produced answer", std::to_string(r.outcomes.produced_answer)});
  detail::md_row(out, {"Early stop", std::to_string(r.outcomes.early_stop)});
  detail::md_row(out, {"&nbsp;&nbsp;repeat limit",
                       std::to_string(r.outcomes.repeat_limit)});
  detail::md_row(out, {"&nbsp;&nbsp;invalid action limit",
                       std::to_string(r.outcomes.invalid_limit)});
  detail::md_row(out, {"&nbsp;&nbsp;step limit",
                       std::to_string(r.outcomes.step_limit)});
  detail::md_row(out, {"Sum", std::to_string(r.outcomes.sum)});
  detail::md_row(out, {"Percentage of Legitimate Answers",
                       pct2(r.outcomes.legitimate_rate)});
  out += '\n';

  out += "## Per-Task Scores\n\n";
  std::vector<std::string> head = {"Task", "Domain", "Outcome"};
  for (int m = 0; m < metrics::kMetricCount; ++m)
    head.push_back(metrics::metric_display_name(m));
  head.insert(head.end(), {"Incidents", "Recoveries", "Reference Steps",
                           "Agent Steps", "Intent Coverage"});
  detail::md_row(out, head);
  detail::md_rule(out, head.size());
  for (const metrics::TaskScores& t : r.per_task) {
    detail::md_row(
        out,
        {std::to_string(t.task_id), display_name(t.domain),
         outcome_text(t.outcome), cell(t.step_success), cell(t.recovery),
         cell(t.repetitiveness), cell(t.element_accuracy),
         cell(t.partial_success), std::to_string(t.deviation_incidents),
         std::to_string(t.recoveries), std::to_string(t.gold_len),
         std::to_string(t.agent_len), fmt4(t.element_coverage)});
  }
  return out;
}

// -------- files --------

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerdeError("cannot write '" + path + "'");
  out << text;
}

inline std::optional<std::string> read_text_file_if_exists(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

// scores.jsonl always lands next to the rendered files; it is the source of
// truth the verify command recomputes from.
inline void write_report_files(const std::string& dir, const MetricReport& r,
                               const std::string& format) {
  namespace fs = std::filesystem;
  if (format != "md" && format != "csv" && format != "json-lines")
    throw std::invalid_argument("unknown report format '" + format + "'");
  fs::create_directories(dir);
  write_scores_file((fs::path(dir) / "scores.jsonl").string(), r.per_task);
  if (format == "md") {
    write_text_file((fs::path(dir) / "report.md").string(), render_markdown(r));
  } else if (format == "csv") {
    write_text_file((fs::path(dir) / "per_task.csv").string(),
                    render_per_task_csv(r));
    write_text_file((fs::path(dir) / "aggregate.csv").string(),
                    render_aggregate_csv(r));
    write_text_file((fs::path(dir) / "domains.csv").string(),
                    render_domains_csv(r));
    write_text_file((fs::path(dir) / "steps.csv").string(),
                    render_steps_csv(r));
    write_text_file((fs::path(dir) / "outcomes.csv").string(),
                    render_outcomes_csv(r));
  }
}

// Re-derive every rendered file from scores.jsonl and byte-compare against
// what is on disk. Returns one message per discrepancy; empty means clean.
inline std::vector<std::string> verify_report_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;

  const std::string scores_path = (fs::path(dir) / "scores.jsonl").string();
  std::vector<metrics::TaskScores> scores;
  try {
    scores = read_scores_file(scores_path);
  } catch (const std::exception& e) {
    problems.push_back(std::string("cannot reload scores: ") + e.what());
    return problems;
  }
  MetricReport rebuilt = metrics::aggregate(std::move(scores));

  struct Expected {
    const char* name;
    std::string (*render)(const MetricReport&);
  };
  const Expected expected[] = {
      {"report.md", render_markdown},
      {"per_task.csv", render_per_task_csv},
      {"aggregate.csv", render_aggregate_csv},
      {"domains.csv", render_domains_csv},
      {"steps.csv", render_steps_csv},
      {"outcomes.csv", render_outcomes_csv},
  };
  bool any = false;
  for (const Expected& e : expected) {
    const std::string path = (fs::path(dir) / e.name).string();
    std::optional<std::string> on_disk = read_text_file_if_exists(path);
    if (!on_disk) continue;
    any = true;
    if (*on_disk != e.render(rebuilt))
      problems.push_back(std::string(e.name) +
                         " does not match its recomputation");
  }
  if (!any)
    problems.push_back("no rendered report files found in '" + dir + "'");
  return problems;
}

}  // namespace traceval::report
