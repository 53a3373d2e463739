#pragma once

// Loader for reference (gold) task datasets stored as JSON lines. Each
// record carries the task intent plus the human demonstration as a list of
// step strings; steps are preferably action DSL but free-form descriptions
// are accepted and approximated so older annotation dumps still load.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "traceval/core.hpp"
#include "traceval/grammar.hpp"

namespace traceval {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GoldDatasetRecord {
  int64_t task_id = 0;
  std::string intent;
  Domain domain = Domain::Synthetic;
  std::vector<std::string> steps;
  std::vector<std::string> requirements;
  std::optional<std::string> reference_answer;
  bool solvable = true;
};

struct ParsedGoldStep {
  Action action;
  bool approximated = false;  // built from free text, not DSL
};

namespace detail {

inline bool starts_with_word(const std::string& text, const std::string& word) {
  if (text.size() < word.size()) return false;
  if (text.compare(0, word.size(), word) != 0) return false;
  return text.size() == word.size() || text[word.size()] == ' ';
}

inline std::string after_word(const std::string& text, const std::string& word) {
  std::string rest = text.substr(word.size());
  size_t b = rest.find_first_not_of(' ');
  return b == std::string::npos ? std::string() : rest.substr(b);
}

inline std::string strip_leading(const std::string& text,
                                 std::initializer_list<const char*> words) {
  std::string out = text;
  for (bool changed = true; changed;) {
    changed = false;
    for (const char* w : words) {
      if (starts_with_word(out, w)) {
        out = after_word(out, w);
        changed = true;
      }
    }
  }
  return out;
}

}  // namespace detail

// Free-text step descriptions become approximate actions: the grammar gets
// first shot, then verb heuristics map the common annotation phrasings onto
// label-targeted actions. Anything else is treated as a click on whatever
// the text names, which still supports target-based matching.
inline ParsedGoldStep parse_gold_step(const std::string& raw) {
  if (std::optional<Action> exact = grammar::parse_ok(raw)) return {*exact, false};

  const std::string text = normalize_text(raw);
  using detail::after_word;
  using detail::starts_with_word;
  using detail::strip_leading;

  if (starts_with_word(text, "scroll")) {
    const bool up = text.find("up") != std::string::npos;
    return {make::scroll(up ? ScrollDirection::Up : ScrollDirection::Down),
            true};
  }
  if (text == "go back" || text == "navigate back" || text == "back")
    return {make::go_back(), true};
  if (text == "go forward" || text == "navigate forward")
    return {make::go_forward(), true};
  if (starts_with_word(text, "press"))
    return {make::press(after_word(text, "press")), true};
  if (starts_with_word(text, "hover")) {
    std::string label =
        strip_leading(after_word(text, "hover"), {"over", "on"});
    return {make::hover(std::move(label)), true};
  }
  if (starts_with_word(text, "type") || starts_with_word(text, "enter") ||
      starts_with_word(text, "search for")) {
    std::string rest = text;
    for (const char* verb : {"type", "enter", "search for"}) {
      if (starts_with_word(rest, verb)) {
        rest = after_word(rest, verb);
        break;
      }
    }
    std::string payload = rest;
    std::string target = "search box";
    for (const std::string sep : {" into ", " in "}) {
      const size_t at = rest.rfind(sep);
      if (at != std::string::npos) {
        payload = rest.substr(0, at);
        target = strip_leading(rest.substr(at + sep.size()), {"the"});
        break;
      }
    }
    return {make::type_text(std::move(target), std::move(payload)), true};
  }
  if (starts_with_word(text, "stop") || starts_with_word(text, "answer")) {
    std::string rest = strip_leading(text, {"stop", "answer", "with", "is"});
    if (!rest.empty() && rest.front() == ':') rest = rest.substr(1);
    const size_t b = rest.find_first_not_of(' ');
    return {make::stop(b == std::string::npos ? "" : rest.substr(b)), true};
  }

  std::string label = strip_leading(
      text, {"click", "on", "the", "open", "select", "choose", "go to"});
  if (label.empty()) label = text;
  return {make::click(std::move(label)), true};
}

inline TaskSpec gold_record_to_task(const GoldDatasetRecord& r) {
  TaskSpec t;
  t.task_id = r.task_id;
  t.intent = r.intent;
  t.domain = r.domain;
  t.requirements = r.requirements;
  t.reference_answer = r.reference_answer;
  t.solvable = r.solvable;
  return t;
}

inline Trajectory gold_record_to_trajectory(const GoldDatasetRecord& r,
                                            int* approximated_steps = nullptr) {
  std::vector<Action> actions;
  actions.reserve(r.steps.size());
  int approx = 0;
  for (const std::string& s : r.steps) {
    ParsedGoldStep p = parse_gold_step(s);
    if (p.approximated) ++approx;
    actions.push_back(std::move(p.action));
  }
  if (approximated_steps) *approximated_steps = approx;
  return gold_from_actions(actions);
}

// JSON lines, one record each. Duplicate task ids and solvable tasks with
// no demonstration are data bugs and rejected with the line number named.
inline std::vector<GoldDatasetRecord> load_gold_dataset(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file '" + path + "'");

  std::vector<GoldDatasetRecord> out;
  std::set<int64_t> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(where + ": bad JSON: " + e.what());
    }

    GoldDatasetRecord r;
    try {
      r.task_id = j.at("task_id").get<int64_t>();
      r.intent = j.at("intent").get<std::string>();
      const std::string dom = j.value("domain", std::string("synthetic"));
      std::optional<Domain> d = domain_from_string(dom);
      if (!d) throw DatasetError(where + ": unknown domain '" + dom + "'");
      r.domain = *d;
      if (j.contains("steps"))
        r.steps = j.at("steps").get<std::vector<std::string>>();
      if (j.contains("requirements"))
        r.requirements = j.at("requirements").get<std::vector<std::string>>();
      if (j.contains("reference_answer") && !j.at("reference_answer").is_null())
        r.reference_answer = j.at("reference_answer").get<std::string>();
      r.solvable = j.value("solvable", true);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(where + ": " + e.what());
    }

    if (!seen.insert(r.task_id).second)
      throw DatasetError(where + ": duplicate task_id " +
                         std::to_string(r.task_id));
    if (r.solvable && r.steps.empty())
      throw DatasetError(where + ": solvable task " +
                         std::to_string(r.task_id) +
                         " has no demonstration steps");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace traceval
