#pragma once

// JSON (de)serialization for every persisted type plus the JSONL trace and
// score file formats. Field names are part of the on-disk contract; absent
// optionals are omitted rather than written as null.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "traceval/core.hpp"
#include "traceval/metrics.hpp"
#include "traceval/sim.hpp"

namespace traceval {

using nlohmann::json;

struct SerdeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void to_json(json& j, const Action& a) {
  j = json{{"kind", to_string(a.kind)}};
  if (a.target_id) j["target_id"] = *a.target_id;
  if (a.target_label) j["target_label"] = *a.target_label;
  if (a.payload) j["payload"] = *a.payload;
  if (a.press_enter) j["press_enter"] = *a.press_enter;
  if (a.direction) j["direction"] = to_string(*a.direction);
}

inline void from_json(const json& j, Action& a) {
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<ActionKind> k = action_kind_from_string(kind);
  if (!k) throw SerdeError("unknown action kind '" + kind + "'");
  a = Action{};
  a.kind = *k;
  if (j.contains("target_id")) a.target_id = j.at("target_id").get<int64_t>();
  if (j.contains("target_label"))
    a.target_label = j.at("target_label").get<std::string>();
  if (j.contains("payload")) a.payload = j.at("payload").get<std::string>();
  if (j.contains("press_enter")) a.press_enter = j.at("press_enter").get<bool>();
  if (j.contains("direction")) {
    const std::string d = j.at("direction").get<std::string>();
    if (d == "down")
      a.direction = ScrollDirection::Down;
    else if (d == "up")
      a.direction = ScrollDirection::Up;
    else
      throw SerdeError("unknown scroll direction '" + d + "'");
  }
}

inline void to_json(json& j, const Step& s) {
  j = json{{"index", s.index}, {"executed_action", s.executed_action}};
  if (s.previous_action) j["previous_action"] = *s.previous_action;
  if (!s.reasoning.empty()) j["reasoning"] = s.reasoning;
  if (s.declared_intent) j["declared_intent"] = *s.declared_intent;
}

inline void from_json(const json& j, Step& s) {
  s = Step{};
  s.index = j.at("index").get<int>();
  s.executed_action = j.at("executed_action").get<Action>();
  if (j.contains("previous_action"))
    s.previous_action = j.at("previous_action").get<Action>();
  if (j.contains("reasoning")) s.reasoning = j.at("reasoning").get<std::string>();
  if (j.contains("declared_intent"))
    s.declared_intent = j.at("declared_intent").get<Action>();
}

inline void to_json(json& j, const Trajectory& t) {
  j = json{{"kind", to_string(t.kind)}, {"steps", t.steps}};
  if (t.final_answer) j["final_answer"] = *t.final_answer;
}

inline void from_json(const json& j, Trajectory& t) {
  t = Trajectory{};
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<TrajectoryKind> k = trajectory_kind_from_string(kind);
  if (!k) throw SerdeError("unknown trajectory kind '" + kind + "'");
  t.kind = *k;
  t.steps = j.at("steps").get<std::vector<Step>>();
  if (j.contains("final_answer"))
    t.final_answer = j.at("final_answer").get<std::string>();
}

inline void to_json(json& j, const TaskSpec& t) {
  j = json{{"task_id", t.task_id},
           {"intent", t.intent},
           {"domain", to_string(t.domain)},
           {"solvable", t.solvable}};
  if (!t.requirements.empty()) j["requirements"] = t.requirements;
  if (t.reference_answer) j["reference_answer"] = *t.reference_answer;
}

inline void from_json(const json& j, TaskSpec& t) {
  t = TaskSpec{};
  t.task_id = j.at("task_id").get<int64_t>();
  t.intent = j.at("intent").get<std::string>();
  const std::string dom = j.at("domain").get<std::string>();
  std::optional<Domain> d = domain_from_string(dom);
  if (!d) throw SerdeError("unknown domain '" + dom + "'");
  t.domain = *d;
  t.solvable = j.value("solvable", true);
  if (j.contains("requirements"))
    t.requirements = j.at("requirements").get<std::vector<std::string>>();
  if (j.contains("reference_answer"))
    t.reference_answer = j.at("reference_answer").get<std::string>();
}

inline void to_json(json& j, const TrajectoryBundle& b) {
  j = json{{"task", b.task}, {"actual", b.actual}};
  if (b.gold) j["gold"] = *b.gold;
  if (b.planned) j["planned"] = *b.planned;
}

inline void from_json(const json& j, TrajectoryBundle& b) {
  b = TrajectoryBundle{};
  b.task = j.at("task").get<TaskSpec>();
  b.actual = j.at("actual").get<Trajectory>();
  if (j.contains("gold")) b.gold = j.at("gold").get<Trajectory>();
  if (j.contains("planned")) b.planned = j.at("planned").get<Trajectory>();
}

}  // namespace traceval

namespace traceval::metrics {

inline void to_json(json& j, const OutcomeClass& o) {
  j = json{{"kind", to_string(o.kind)}};
  if (o.reason) j["reason"] = to_string(*o.reason);
}

inline void from_json(const json& j, OutcomeClass& o) {
  o = OutcomeClass{};
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "na")
    o.kind = OutcomeKind::NA;
  else if (kind == "early_stop")
    o.kind = OutcomeKind::EarlyStop;
  else if (kind == "produced_answer")
    o.kind = OutcomeKind::ProducedAnswer;
  else
    throw SerdeError("unknown outcome kind '" + kind + "'");
  if (j.contains("reason")) {
    const std::string r = j.at("reason").get<std::string>();
    if (r == "repeat_limit")
      o.reason = EarlyStopReason::RepeatLimit;
    else if (r == "invalid_limit")
      o.reason = EarlyStopReason::InvalidLimit;
    else if (r == "step_limit")
      o.reason = EarlyStopReason::StepLimit;
    else
      throw SerdeError("unknown early stop reason '" + r + "'");
  }
}

inline void to_json(json& j, const TaskScores& s) {
  j = json{{"task_id", s.task_id},
           {"domain", to_string(s.domain)},
           {"outcome", s.outcome},
           {"has_gold", s.has_gold},
           {"gold_len", s.gold_len},
           {"agent_len", s.agent_len},
           {"deviation_incidents", s.deviation_incidents},
           {"recoveries", s.recoveries},
           {"element_coverage", s.element_coverage}};
  if (s.step_success) j["step_success"] = *s.step_success;
  if (s.recovery) j["recovery"] = *s.recovery;
  if (s.repetitiveness) j["repetitiveness"] = *s.repetitiveness;
  if (s.element_accuracy) j["element_accuracy"] = *s.element_accuracy;
  if (s.partial_success) j["partial_success"] = *s.partial_success;
}

inline void from_json(const json& j, TaskScores& s) {
  s = TaskScores{};
  s.task_id = j.at("task_id").get<int64_t>();
  const std::string dom = j.at("domain").get<std::string>();
  std::optional<Domain> d = domain_from_string(dom);
  if (!d) throw SerdeError("unknown domain '" + dom + "'");
  s.domain = *d;
  s.outcome = j.at("outcome").get<OutcomeClass>();
  s.has_gold = j.at("has_gold").get<bool>();
  s.gold_len = j.at("gold_len").get<size_t>();
  s.agent_len = j.at("agent_len").get<size_t>();
  s.deviation_incidents = j.at("deviation_incidents").get<int>();
  s.recoveries = j.at("recoveries").get<int>();
  s.element_coverage = j.at("element_coverage").get<double>();
  if (j.contains("step_success"))
    s.step_success = j.at("step_success").get<double>();
  if (j.contains("recovery")) s.recovery = j.at("recovery").get<double>();
  if (j.contains("repetitiveness"))
    s.repetitiveness = j.at("repetitiveness").get<double>();
  if (j.contains("element_accuracy"))
    s.element_accuracy = j.at("element_accuracy").get<double>();
  if (j.contains("partial_success"))
    s.partial_success = j.at("partial_success").get<double>();
}

}  // namespace traceval::metrics

namespace traceval::sim {

inline void to_json(json& j, const Element& e) {
  j = json{{"element_id", e.element_id}, {"role", e.role}, {"label", e.label}};
  if (!e.properties.empty()) j["properties"] = e.properties;
}

inline void from_json(const json& j, Element& e) {
  e = Element{};
  e.element_id = j.at("element_id").get<int64_t>();
  e.role = j.value("role", std::string("link"));
  e.label = j.at("label").get<std::string>();
  if (j.contains("properties"))
    e.properties = j.at("properties").get<std::map<std::string, std::string>>();
}

inline void to_json(json& j, const PageState& s) {
  j = json{{"state_id", s.state_id}, {"elements", s.elements}};
  if (s.is_goal) j["is_goal"] = true;
  if (!s.answer_fragments.empty()) j["answer_fragments"] = s.answer_fragments;
}

inline void from_json(const json& j, PageState& s) {
  s = PageState{};
  s.state_id = j.at("state_id").get<std::string>();
  if (j.contains("elements"))
    s.elements = j.at("elements").get<std::vector<Element>>();
  s.is_goal = j.value("is_goal", false);
  if (j.contains("answer_fragments"))
    s.answer_fragments =
        j.at("answer_fragments").get<std::vector<std::string>>();
}

inline void to_json(json& j, const StateGraph& g) {
  std::vector<PageState> states;
  for (const auto& [id, s] : g.states) states.push_back(s);
  json edges = json::array();
  for (const auto& [from, out] : g.edges)
    for (const auto& [sig, edge] : out)
      edges.push_back(
          json{{"from", from}, {"action", edge.action}, {"to", edge.to}});
  j = json{{"start", g.start_state}, {"states", states}, {"edges", edges}};
}

inline void from_json(const json& j, StateGraph& g) {
  g = StateGraph{};
  g.start_state = j.at("start").get<std::string>();
  for (const json& js : j.at("states")) g.add_state(js.get<PageState>());
  if (j.contains("edges")) {
    for (const json& je : j.at("edges"))
      g.add_edge(je.at("from").get<std::string>(), je.at("action").get<Action>(),
                 je.at("to").get<std::string>());
  }
}

inline void to_json(json& j, const PlanPerturbation& p) {
  j = json::object();
  if (!p.drop_steps.empty()) j["drop_steps"] = p.drop_steps;
  if (!p.insert_noise.empty()) {
    json arr = json::array();
    for (const auto& [pos, a] : p.insert_noise)
      arr.push_back(json{{"position", pos}, {"action", a}});
    j["insert_noise"] = arr;
  }
  if (!p.dynamic_reveal.empty()) j["dynamic_reveal"] = p.dynamic_reveal;
}

inline void from_json(const json& j, PlanPerturbation& p) {
  p = PlanPerturbation{};
  if (j.contains("drop_steps"))
    p.drop_steps = j.at("drop_steps").get<std::vector<int>>();
  if (j.contains("insert_noise")) {
    for (const json& ji : j.at("insert_noise"))
      p.insert_noise.emplace_back(ji.at("position").get<int>(),
                                  ji.at("action").get<Action>());
  }
  if (j.contains("dynamic_reveal"))
    p.dynamic_reveal = j.at("dynamic_reveal").get<std::set<int64_t>>();
}

inline void to_json(json& j, const Scenario& s) {
  j = json{{"task", s.task},
           {"graph", s.graph},
           {"paradigm", s.paradigm},
           {"policy", s.policy},
           {"replan", s.replan}};
  json pert;
  to_json(pert, s.perturbation);
  if (!pert.empty()) j["perturbation"] = pert;
}

inline void from_json(const json& j, Scenario& s) {
  s = Scenario{};
  s.task = j.at("task").get<TaskSpec>();
  s.graph = j.at("graph").get<StateGraph>();
  s.paradigm = j.value("paradigm", std::string("full_plan"));
  s.policy = j.value("policy", std::string("shortest_path"));
  s.replan = j.value("replan", false);
  if (j.contains("perturbation"))
    s.perturbation = j.at("perturbation").get<PlanPerturbation>();
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SerdeError("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SerdeError(path + ": bad JSON: " + e.what());
  }
  try {
    return j.get<Scenario>();
  } catch (const json::exception& e) {
    throw SerdeError(path + ": " + e.what());
  }
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
  std::ofstream out(path);
  if (!out) throw SerdeError("cannot write scenario file '" + path + "'");
  json j = sc;
  out << j.dump(2) << "\n";
}

}  // namespace traceval::sim

namespace traceval {

// -------- JSONL containers: one object per line --------

template <typename T>
inline std::vector<T> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SerdeError("cannot open file '" + path + "'");
  std::vector<T> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw SerdeError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
inline void write_jsonl_file(const std::string& path,
                             const std::vector<T>& items) {
  std::ofstream out(path);
  if (!out) throw SerdeError("cannot write file '" + path + "'");
  for (const T& item : items) {
    json j = item;
    out << j.dump() << "\n";
  }
}

inline std::vector<TrajectoryBundle> read_trace_file(const std::string& path) {
  return read_jsonl_file<TrajectoryBundle>(path);
}

inline void write_trace_file(const std::string& path,
                             const std::vector<TrajectoryBundle>& bundles) {
  write_jsonl_file(path, bundles);
}

inline std::vector<metrics::TaskScores> read_scores_file(
    const std::string& path) {
  return read_jsonl_file<metrics::TaskScores>(path);
}

inline void write_scores_file(const std::string& path,
                              const std::vector<metrics::TaskScores>& scores) {
  write_jsonl_file(path, scores);
}

}  // namespace traceval
