#pragma once

// Core value types for web-agent trajectory evaluation: actions, steps,
// trajectories, task specs and the bundle that ties one task's gold/planned/
// actual trajectories together. Everything is an immutable-style value type;
// all mutation happens by building new objects.

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace traceval {

enum class ActionKind {
  Click,
  Type,
  Hover,
  Press,
  Scroll,
  NewTab,
  TabFocus,
  CloseTab,
  Goto,
  GoBack,
  GoForward,
  Stop,
  None,  // placeholder for an unparseable/failed execution slot
};

enum class ScrollDirection { Down, Up };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Click: return "click";
    case ActionKind::Type: return "type";
    case ActionKind::Hover: return "hover";
    case ActionKind::Press: return "press";
    case ActionKind::Scroll: return "scroll";
    case ActionKind::NewTab: return "new_tab";
    case ActionKind::TabFocus: return "tab_focus";
    case ActionKind::CloseTab: return "close_tab";
    case ActionKind::Goto: return "goto";
    case ActionKind::GoBack: return "go_back";
    case ActionKind::GoForward: return "go_forward";
    case ActionKind::Stop: return "stop";
    case ActionKind::None: return "none";
  }
  return "none";
}

inline std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  if (s == "click") return ActionKind::Click;
  if (s == "type") return ActionKind::Type;
  if (s == "hover") return ActionKind::Hover;
  if (s == "press") return ActionKind::Press;
  if (s == "scroll") return ActionKind::Scroll;
  if (s == "new_tab") return ActionKind::NewTab;
  if (s == "tab_focus") return ActionKind::TabFocus;
  if (s == "close_tab") return ActionKind::CloseTab;
  if (s == "goto") return ActionKind::Goto;
  if (s == "go_back") return ActionKind::GoBack;
  if (s == "go_forward") return ActionKind::GoForward;
  if (s == "stop") return ActionKind::Stop;
  if (s == "none") return ActionKind::None;
  return std::nullopt;
}

inline const char* to_string(ScrollDirection d) {
  return d == ScrollDirection::Down ? "down" : "up";
}

struct Action {
  ActionKind kind = ActionKind::None;
  std::optional<int64_t> target_id;          // numeric element / tab id
  std::optional<std::string> target_label;   // element description
  std::optional<std::string> payload;        // typed text, key comb, url, answer
  std::optional<bool> press_enter;           // type only; unset means default (true)
  std::optional<ScrollDirection> direction;  // scroll only

  bool operator==(const Action&) const = default;

  bool effective_press_enter() const { return press_enter.value_or(true); }

  bool is_element_targeted() const {
    return kind == ActionKind::Click || kind == ActionKind::Type ||
           kind == ActionKind::Hover;
  }
};

// Terse builders; tests and the simulator construct a lot of actions.
namespace make {

inline Action click(int64_t id) {
  Action a;
  a.kind = ActionKind::Click;
  a.target_id = id;
  return a;
}

inline Action click(std::string label) {
  Action a;
  a.kind = ActionKind::Click;
  a.target_label = std::move(label);
  return a;
}

inline Action click(int64_t id, std::string label) {
  Action a;
  a.kind = ActionKind::Click;
  a.target_id = id;
  a.target_label = std::move(label);
  return a;
}

inline Action hover(int64_t id) {
  Action a;
  a.kind = ActionKind::Hover;
  a.target_id = id;
  return a;
}

inline Action hover(std::string label) {
  Action a;
  a.kind = ActionKind::Hover;
  a.target_label = std::move(label);
  return a;
}

inline Action type_text(int64_t id, std::string text, bool enter = true) {
  Action a;
  a.kind = ActionKind::Type;
  a.target_id = id;
  a.payload = std::move(text);
  a.press_enter = enter;
  return a;
}

inline Action type_text(std::string label, std::string text, bool enter = true) {
  Action a;
  a.kind = ActionKind::Type;
  a.target_label = std::move(label);
  a.payload = std::move(text);
  a.press_enter = enter;
  return a;
}

inline Action press(std::string key_comb) {
  Action a;
  a.kind = ActionKind::Press;
  a.payload = std::move(key_comb);
  return a;
}

inline Action scroll(ScrollDirection d) {
  Action a;
  a.kind = ActionKind::Scroll;
  a.direction = d;
  return a;
}

inline Action new_tab() {
  Action a;
  a.kind = ActionKind::NewTab;
  return a;
}

inline Action tab_focus(int64_t index) {
  Action a;
  a.kind = ActionKind::TabFocus;
  a.target_id = index;
  return a;
}

inline Action close_tab() {
  Action a;
  a.kind = ActionKind::CloseTab;
  return a;
}

inline Action goto_url(std::string url) {
  Action a;
  a.kind = ActionKind::Goto;
  a.payload = std::move(url);
  return a;
}

inline Action go_back() {
  Action a;
  a.kind = ActionKind::GoBack;
  return a;
}

inline Action go_forward() {
  Action a;
  a.kind = ActionKind::GoForward;
  return a;
}

inline Action stop(std::string answer) {
  Action a;
  a.kind = ActionKind::Stop;
  a.payload = std::move(answer);
  return a;
}

inline Action none() { return Action{}; }

}  // namespace make

// Text normalization used for all fuzzy comparisons: ASCII lowercase,
// whitespace runs collapsed to single spaces, leading/trailing punctuation
// stripped down to the first/last word character. Bytes >= 0x80 are left
// alone so multi-byte characters survive. Idempotent.
inline std::string normalize_text(std::string_view in) {
  auto wordish = [](unsigned char c) {
    return c >= 0x80 || std::isalnum(c) != 0;
  };
  std::string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char ch : in) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? char(std::tolower(c)) : ch);
  }
  size_t b = 0;
  size_t e = out.size();
  while (b < e && !wordish(static_cast<unsigned char>(out[b]))) ++b;
  while (e > b && !wordish(static_cast<unsigned char>(out[e - 1]))) --e;
  return out.substr(b, e - b);
}

// Normalized comparison without building strings when the raw bytes already
// agree; the fallback pays two SSO-friendly allocations at most.
inline bool text_equal_normalized(std::string_view a, std::string_view b) {
  if (a == b) return true;
  return normalize_text(a) == normalize_text(b);
}

namespace detail {

inline bool opt_text_equal(const std::optional<std::string>& a,
                           const std::optional<std::string>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return text_equal_normalized(*a, *b);
}

}  // namespace detail

// Lowercase label/payload and collapse whitespace; kind, ids, flags and
// direction stay untouched.
inline Action normalize_action(const Action& a) {
  Action out = a;
  if (out.target_label) out.target_label = normalize_text(*out.target_label);
  if (out.payload) out.payload = normalize_text(*out.payload);
  return out;
}

// Canonical unambiguous encoding of an action, used for edge keys, cache
// keys and lexicographic tie-breaking. Distinct actions get distinct
// signatures; normalization is the caller's business.
inline std::string signature(const Action& a) {
  std::string s = to_string(a.kind);
  if (a.target_id) {
    s += " #";
    s += std::to_string(*a.target_id);
  }
  if (a.target_label) {
    s += " @";
    s += *a.target_label;
  }
  if (a.direction) {
    s += " dir=";
    s += to_string(*a.direction);
  }
  if (a.payload) {
    s += " [";
    s += *a.payload;
    s += "]";
  }
  if (a.kind == ActionKind::Type) {
    s += a.effective_press_enter() ? " enter=1" : " enter=0";
  }
  return s;
}

// Human-oriented one-line description, used in judge prompts and reports.
inline std::string describe(const Action& a) {
  auto target = [&]() -> std::string {
    std::string t;
    if (a.target_id) t = "[" + std::to_string(*a.target_id) + "]";
    if (a.target_label) {
      if (!t.empty()) t += " ";
      t += "'" + *a.target_label + "'";
    }
    return t.empty() ? std::string("(no target)") : t;
  };
  switch (a.kind) {
    case ActionKind::Click: return "click " + target();
    case ActionKind::Hover: return "hover over " + target();
    case ActionKind::Type: {
      std::string s = "type '" + a.payload.value_or("") + "' into " + target();
      if (!a.effective_press_enter()) s += " without pressing enter";
      return s;
    }
    case ActionKind::Press: return "press '" + a.payload.value_or("") + "'";
    case ActionKind::Scroll:
      return a.direction == ScrollDirection::Up ? "scroll up" : "scroll down";
    case ActionKind::NewTab: return "open a new tab";
    case ActionKind::TabFocus:
      return "focus tab " + std::to_string(a.target_id.value_or(0));
    case ActionKind::CloseTab: return "close the tab";
    case ActionKind::Goto: return "go to " + a.payload.value_or("");
    case ActionKind::GoBack: return "go back";
    case ActionKind::GoForward: return "go forward";
    case ActionKind::Stop: return "stop with answer '" + a.payload.value_or("") + "'";
    case ActionKind::None: return "None";
  }
  return "None";
}

struct Step {
  int index = 0;                           // 1-based position
  std::optional<Action> previous_action;   // as restated by the agent
  std::string reasoning;                   // free text, may embed the intent
  std::optional<Action> declared_intent;   // parsed from reasoning
  Action executed_action;                  // what actually ran (None = failed)
};

enum class TrajectoryKind { HumanGold, AgentPlanned, AgentActual };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::HumanGold: return "human_gold";
    case TrajectoryKind::AgentPlanned: return "agent_planned";
    case TrajectoryKind::AgentActual: return "agent_actual";
  }
  return "agent_actual";
}

inline std::optional<TrajectoryKind> trajectory_kind_from_string(
    std::string_view s) {
  if (s == "human_gold") return TrajectoryKind::HumanGold;
  if (s == "agent_planned") return TrajectoryKind::AgentPlanned;
  if (s == "agent_actual") return TrajectoryKind::AgentActual;
  return std::nullopt;
}

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::AgentActual;
  std::vector<Step> steps;
  std::optional<std::string> final_answer;  // payload of a terminal Stop

  std::vector<Action> actions() const {
    std::vector<Action> out;
    out.reserve(steps.size());
    for (const Step& s : steps) out.push_back(s.executed_action);
    return out;
  }

  const Action* terminal_stop() const {
    if (steps.empty()) return nullptr;
    const Action& last = steps.back().executed_action;
    return last.kind == ActionKind::Stop ? &last : nullptr;
  }
};

// Convenience: build a gold trajectory from bare actions.
inline Trajectory gold_from_actions(const std::vector<Action>& actions) {
  Trajectory t;
  t.kind = TrajectoryKind::HumanGold;
  int i = 0;
  for (const Action& a : actions) {
    Step s;
    s.index = ++i;
    s.executed_action = a;
    t.steps.push_back(std::move(s));
  }
  return t;
}

enum class Domain { CMS, Gitlab, Map, Reddit, Ecommerce, Synthetic };

inline const char* to_string(Domain d) {
  switch (d) {
    case Domain::CMS: return "cms";
    case Domain::Gitlab: return "gitlab";
    case Domain::Map: return "map";
    case Domain::Reddit: return "reddit";
    case Domain::Ecommerce: return "ecommerce";
    case Domain::Synthetic: return "synthetic";
  }
  return "synthetic";
}

inline const char* display_name(Domain d) {
  switch (d) {
    case Domain::CMS: return "CMS";
    case Domain::Gitlab: return "Gitlab";
    case Domain::Map: return "Map";
    case Domain::Reddit: return "Reddit";
    case Domain::Ecommerce: return "E-commerce";
    case Domain::Synthetic: return "Synthetic";
  }
  return "Synthetic";
}

inline std::optional<Domain> domain_from_string(std::string_view s) {
  if (s == "cms") return Domain::CMS;
  if (s == "gitlab") return Domain::Gitlab;
  if (s == "map") return Domain::Map;
  if (s == "reddit") return Domain::Reddit;
  if (s == "ecommerce") return Domain::Ecommerce;
  if (s == "synthetic") return Domain::Synthetic;
  return std::nullopt;
}

constexpr Domain kAllDomains[] = {Domain::CMS,    Domain::Gitlab,
                                  Domain::Map,    Domain::Reddit,
                                  Domain::Ecommerce, Domain::Synthetic};

struct TaskSpec {
  int64_t task_id = 0;
  std::string intent;
  Domain domain = Domain::Synthetic;
  std::vector<std::string> requirements;  // answer keywords, >= 2 for req tasks
  std::optional<std::string> reference_answer;
  bool solvable = true;

  bool is_req_task() const { return requirements.size() >= 2; }
};

struct TrajectoryBundle {
  TaskSpec task;
  std::optional<Trajectory> gold;
  std::optional<Trajectory> planned;
  Trajectory actual;
};

struct Violation {
  int step_index = 0;  // 0 = trajectory-level
  std::string message;
};

inline std::string to_string(const Violation& v) {
  return v.message + " @" + std::to_string(v.step_index);
}

namespace detail {

inline void check_action_shape(const Action& a, int step_index,
                               const char* slot, bool executed_slot,
                               std::vector<Violation>& out) {
  auto add = [&](std::string msg) {
    out.push_back({step_index, std::string(slot) + ": " + std::move(msg)});
  };
  switch (a.kind) {
    case ActionKind::Click:
    case ActionKind::Hover:
      if (!a.target_id && !a.target_label) add("missing target");
      break;
    case ActionKind::Type:
      if (!a.target_id && !a.target_label) add("missing target");
      if (!a.payload) add("missing typed text");
      break;
    case ActionKind::Press:
      if (!a.payload || a.payload->empty()) add("missing key combination");
      break;
    case ActionKind::Scroll:
      if (!a.direction) add("missing scroll direction");
      break;
    case ActionKind::TabFocus:
      if (!a.target_id) add("missing tab index");
      break;
    case ActionKind::Goto:
      if (!a.payload || a.payload->empty()) add("missing url");
      break;
    case ActionKind::Stop:
      if (!a.payload) add("missing answer");
      break;
    case ActionKind::NewTab:
    case ActionKind::CloseTab:
    case ActionKind::GoBack:
    case ActionKind::GoForward:
      break;
    case ActionKind::None:
      if (!executed_slot) add("None action outside executed slot");
      break;
  }
}

}  // namespace detail

// Structural invariants: contiguous 1-based indices, Stop only terminal,
// gold trajectories carry executed actions only, per-kind action shapes,
// final_answer consistent with a terminal Stop. Returns all violations.
inline std::vector<Violation> validate_trajectory(const Trajectory& t) {
  std::vector<Violation> out;
  const bool gold = t.kind == TrajectoryKind::HumanGold;
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const Step& s = t.steps[i];
    const int shown = int(i) + 1;
    if (s.index != shown)
      out.push_back({shown, "step index not contiguous"});
    if (s.executed_action.kind == ActionKind::Stop && i + 1 != t.steps.size())
      out.push_back({shown, "Stop not terminal"});
    if (gold) {
      if (!s.reasoning.empty())
        out.push_back({shown, "gold step carries reasoning"});
      if (s.declared_intent)
        out.push_back({shown, "gold step carries declared intent"});
      if (s.previous_action)
        out.push_back({shown, "gold step carries previous action"});
    }
    detail::check_action_shape(s.executed_action, shown, "executed_action",
                               true, out);
    if (s.declared_intent)
      detail::check_action_shape(*s.declared_intent, shown, "declared_intent",
                                 false, out);
    if (s.previous_action)
      detail::check_action_shape(*s.previous_action, shown, "previous_action",
                                 false, out);
  }
  if (t.final_answer) {
    const Action* stop = t.terminal_stop();
    if (stop && stop->payload && *stop->payload != *t.final_answer)
      out.push_back({int(t.steps.size()),
                     "final_answer disagrees with terminal Stop payload"});
  }
  return out;
}

}  // namespace traceval
