#pragma once

// The browser action DSL: `click [id]`, `type [id] [text] [0|1]`, `hover
// [id]`, `press [keys]`, `scroll [down|up]`, `new_tab`, `tab_focus [n]`,
// `close_tab`, `goto [url]`, `go_back`, `go_forward`, `stop [answer]`.
// Tolerated noise: backtick fences around the action and a trailing
// "where [id] is <element description>" suffix. Known-bad shapes such as
// `scroll [direction=down]` stay rejected. Bracket arguments for click/
// hover/type may carry a non-numeric target label instead of an id.

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "traceval/core.hpp"

namespace traceval::grammar {

struct ParseError {
  std::string input;     // offending text (fences stripped)
  size_t position = 0;   // offset into `input` where parsing gave up
  std::string expected;  // what the parser was looking for
};

using ActionResult = std::variant<Action, ParseError>;

inline bool ok(const ActionResult& r) {
  return std::holds_alternative<Action>(r);
}
inline const Action& action(const ActionResult& r) {
  return std::get<Action>(r);
}
inline const ParseError& error(const ActionResult& r) {
  return std::get<ParseError>(r);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::string_view strip_fences(std::string_view s) {
  s = trim(s);
  while (!s.empty() && s.front() == '`') s.remove_prefix(1);
  while (!s.empty() && s.back() == '`') s.remove_suffix(1);
  return trim(s);
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Cut a trailing "where [...] is ..." element description. Only a `where`
// at bracket depth zero counts, so payloads containing the word keep it.
inline std::string_view strip_where_suffix(std::string_view s) {
  int depth = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '[') ++depth;
    else if (c == ']') depth = std::max(0, depth - 1);
    else if (depth == 0 && (c == 'w' || c == 'W')) {
      bool boundary = i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1]));
      if (boundary && i + 5 <= s.size() && lowercase(s.substr(i, 5)) == "where") {
        size_t j = i + 5;
        while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j])))
          ++j;
        if (j < s.size() && s[j] == '[') return trim(s.substr(0, i));
      }
    }
  }
  return s;
}

// Split `s` into top-level bracket groups; anything outside brackets other
// than whitespace is an error. Nested brackets stay inside their group.
inline std::variant<std::vector<std::string>, ParseError> scan_groups(
    std::string_view s, const std::string& full, size_t base) {
  std::vector<std::string> groups;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (s[i] != '[')
      return ParseError{full, base + i, "opening bracket"};
    int depth = 1;
    size_t j = i + 1;
    while (j < s.size() && depth > 0) {
      if (s[j] == '[') ++depth;
      else if (s[j] == ']') --depth;
      ++j;
    }
    if (depth != 0)
      return ParseError{full, base + s.size(), "closing bracket"};
    groups.emplace_back(s.substr(i + 1, j - i - 2));
    i = j;
  }
  return groups;
}

}  // namespace detail

// Parse one DSL action. Errors are data, not exceptions: ingestion counts
// them and maps failures to executed None.
inline ActionResult parse_action(std::string_view raw) {
  using namespace detail;
  std::string_view text = strip_fences(raw);
  std::string full(text);
  if (text.empty()) return ParseError{full, 0, "action keyword"};

  size_t kw_end = 0;
  while (kw_end < text.size() &&
         (std::isalpha(static_cast<unsigned char>(text[kw_end])) ||
          text[kw_end] == '_'))
    ++kw_end;
  const std::string keyword = lowercase(text.substr(0, kw_end));
  std::string_view rest = text.substr(kw_end);
  const size_t rest_base = kw_end;

  auto one_group = [&](const char* what) -> std::variant<std::string, ParseError> {
    auto scanned = scan_groups(strip_where_suffix(rest), full, rest_base);
    if (auto* err = std::get_if<ParseError>(&scanned)) return *err;
    auto& groups = std::get<std::vector<std::string>>(scanned);
    if (groups.size() != 1)
      return ParseError{full, rest_base, std::string("exactly one ") + what};
    return groups[0];
  };

  if (keyword == "click" || keyword == "hover") {
    auto g = one_group("bracketed target");
    if (auto* err = std::get_if<ParseError>(&g)) return *err;
    std::string target(detail::trim(std::get<std::string>(g)));
    if (target.empty())
      return ParseError{full, rest_base, "non-empty target"};
    Action a;
    a.kind = keyword == "click" ? ActionKind::Click : ActionKind::Hover;
    if (all_digits(target)) a.target_id = std::stoll(target);
    else a.target_label = target;
    return a;
  }

  if (keyword == "type") {
    auto scanned = scan_groups(strip_where_suffix(rest), full, rest_base);
    if (auto* err = std::get_if<ParseError>(&scanned)) return *err;
    auto& groups = std::get<std::vector<std::string>>(scanned);
    if (groups.size() < 2 || groups.size() > 3)
      return ParseError{full, rest_base,
                        "bracketed target, content and optional enter flag"};
    std::string target(detail::trim(groups[0]));
    if (target.empty())
      return ParseError{full, rest_base, "non-empty target"};
    Action a;
    a.kind = ActionKind::Type;
    if (all_digits(target)) a.target_id = std::stoll(target);
    else a.target_label = target;
    a.payload = std::string(detail::trim(groups[1]));
    if (groups.size() == 3) {
      std::string flag(detail::trim(groups[2]));
      if (flag != "0" && flag != "1")
        return ParseError{full, rest_base, "enter flag 0 or 1"};
      a.press_enter = flag == "1";
    } else {
      a.press_enter = true;  // enter is pressed after typing by default
    }
    return a;
  }

  if (keyword == "press") {
    auto g = one_group("bracketed key combination");
    if (auto* err = std::get_if<ParseError>(&g)) return *err;
    std::string comb(detail::trim(std::get<std::string>(g)));
    if (comb.empty())
      return ParseError{full, rest_base, "non-empty key combination"};
    return make::press(comb);
  }

  if (keyword == "scroll") {
    auto g = one_group("bracketed direction");
    if (auto* err = std::get_if<ParseError>(&g)) return *err;
    std::string dir = lowercase(detail::trim(std::get<std::string>(g)));
    if (dir == "down") return make::scroll(ScrollDirection::Down);
    if (dir == "up") return make::scroll(ScrollDirection::Up);
    return ParseError{full, rest_base, "scroll direction 'down' or 'up'"};
  }

  if (keyword == "tab_focus") {
    auto g = one_group("bracketed tab index");
    if (auto* err = std::get_if<ParseError>(&g)) return *err;
    std::string idx(detail::trim(std::get<std::string>(g)));
    if (!all_digits(idx))
      return ParseError{full, rest_base, "numeric tab index"};
    return make::tab_focus(std::stoll(idx));
  }

  if (keyword == "goto") {
    auto g = one_group("bracketed url");
    if (auto* err = std::get_if<ParseError>(&g)) return *err;
    std::string url(detail::trim(std::get<std::string>(g)));
    if (url.empty() ||
        std::any_of(url.begin(), url.end(), [](unsigned char c) {
          return std::isspace(c) != 0;
        }))
      return ParseError{full, rest_base, "url without whitespace"};
    return make::goto_url(url);
  }

  if (keyword == "stop") {
    // Answers may contain anything, brackets included: take everything
    // between the first '[' after the keyword and the last ']' of the text.
    size_t open = text.find('[', kw_end);
    if (open == std::string::npos)
      return ParseError{full, rest_base, "bracketed answer"};
    size_t close = text.rfind(']');
    if (close == std::string::npos || close < open)
      return ParseError{full, text.size(), "closing bracket"};
    return make::stop(std::string(text.substr(open + 1, close - open - 1)));
  }

  if (keyword == "new_tab" || keyword == "close_tab" || keyword == "go_back" ||
      keyword == "go_forward") {
    if (!detail::trim(rest).empty())
      return ParseError{full, rest_base, "no trailing text"};
    if (keyword == "new_tab") return make::new_tab();
    if (keyword == "close_tab") return make::close_tab();
    if (keyword == "go_back") return make::go_back();
    return make::go_forward();
  }

  return ParseError{full, 0, "action keyword"};
}

inline std::optional<Action> parse_ok(std::string_view text) {
  ActionResult r = parse_action(text);
  if (ok(r)) return action(r);
  return std::nullopt;
}

// Canonical DSL text. Throws on None and on actions that cannot be
// expressed (no target, missing payload, ...). parse_action(render_action(a))
// returns a for every renderable action.
inline std::string render_action(const Action& a) {
  auto target = [&]() -> std::string {
    if (a.target_id) return std::to_string(*a.target_id);
    if (a.target_label && !a.target_label->empty()) return *a.target_label;
    throw std::invalid_argument("action has no renderable target");
  };
  switch (a.kind) {
    case ActionKind::Click: return "click [" + target() + "]";
    case ActionKind::Hover: return "hover [" + target() + "]";
    case ActionKind::Type: {
      if (!a.payload) throw std::invalid_argument("type action has no text");
      return "type [" + target() + "] [" + *a.payload + "] [" +
             (a.effective_press_enter() ? "1" : "0") + "]";
    }
    case ActionKind::Press:
      if (!a.payload) throw std::invalid_argument("press action has no keys");
      return "press [" + *a.payload + "]";
    case ActionKind::Scroll:
      if (!a.direction)
        throw std::invalid_argument("scroll action has no direction");
      return std::string("scroll [") + to_string(*a.direction) + "]";
    case ActionKind::NewTab: return "new_tab";
    case ActionKind::TabFocus:
      if (!a.target_id)
        throw std::invalid_argument("tab_focus action has no index");
      return "tab_focus [" + std::to_string(*a.target_id) + "]";
    case ActionKind::CloseTab: return "close_tab";
    case ActionKind::Goto:
      if (!a.payload) throw std::invalid_argument("goto action has no url");
      return "goto [" + *a.payload + "]";
    case ActionKind::GoBack: return "go_back";
    case ActionKind::GoForward: return "go_forward";
    case ActionKind::Stop:
      if (!a.payload) throw std::invalid_argument("stop action has no answer");
      return "stop [" + *a.payload + "]";
    case ActionKind::None:
      throw std::invalid_argument("cannot render a None action");
  }
  throw std::invalid_argument("cannot render action");
}

inline constexpr std::string_view kIntentPhrase =
    "in summary, the next action i will perform is";

// Pull the announced next action out of a reasoning blob: last occurrence
// of the summary phrase, then the backtick-fenced action after it. Absent
// when the phrase or fence is missing or the fenced text does not parse.
inline std::optional<Action> extract_declared_intent(std::string_view reasoning) {
  std::string lower = detail::lowercase(reasoning);
  size_t at = lower.rfind(kIntentPhrase);
  if (at == std::string::npos) return std::nullopt;
  size_t cursor = at + kIntentPhrase.size();
  while (cursor < reasoning.size()) {
    unsigned char c = static_cast<unsigned char>(reasoning[cursor]);
    if (std::isspace(c) || c == ':') {
      ++cursor;
      continue;
    }
    break;
  }
  if (cursor >= reasoning.size() || reasoning[cursor] != '`')
    return std::nullopt;
  size_t open_end = cursor;
  while (open_end < reasoning.size() && reasoning[open_end] == '`') ++open_end;
  size_t close = reasoning.find('`', open_end);
  if (close == std::string::npos) return std::nullopt;
  return parse_ok(reasoning.substr(open_end, close - open_end));
}

// One raw step from an agent log, before any parsing.
struct RawStepBlock {
  int index = 0;
  std::string previous_action_text;
  std::string reasoning_text;
  std::string next_action_text;
  std::string metadata_text;  // captured, dropped downstream
};

// Log dialect markers; every field is configurable because serialized agent
// logs drift across harness versions.
struct LogMarkup {
  std::string step_delimiter = "=== STEP";
  std::string previous_marker = "PREVIOUS ACTION:";
  std::string reasoning_marker = "REASONING:";
  std::string metadata_marker = "METADATA:";
  std::string next_marker = "NEXT ACTION:";
};

using BlocksResult = std::variant<std::vector<RawStepBlock>, ParseError>;

inline BlocksResult extract_step_blocks(std::string_view doc,
                                        const LogMarkup& markup = {}) {
  std::vector<RawStepBlock> blocks;
  RawStepBlock current;
  std::string* section = nullptr;
  bool in_block = false;

  auto flush = [&]() {
    if (!in_block) return;
    current.index = int(blocks.size()) + 1;
    for (std::string* f : {&current.previous_action_text,
                           &current.reasoning_text, &current.next_action_text,
                           &current.metadata_text})
      *f = std::string(detail::trim(*f));
    blocks.push_back(std::move(current));
    current = RawStepBlock{};
  };

  size_t pos = 0;
  while (pos <= doc.size()) {
    size_t eol = doc.find('\n', pos);
    std::string_view line = doc.substr(
        pos, eol == std::string::npos ? doc.size() - pos : eol - pos);
    std::string_view stripped = detail::trim(line);
    if (stripped.substr(0, markup.step_delimiter.size()) ==
        markup.step_delimiter) {
      flush();
      in_block = true;
      section = nullptr;
    } else if (in_block) {
      auto starts = [&](const std::string& marker) {
        return !marker.empty() &&
               stripped.substr(0, marker.size()) == marker;
      };
      if (starts(markup.previous_marker)) {
        section = &current.previous_action_text;
        *section = std::string(
            detail::trim(stripped.substr(markup.previous_marker.size())));
      } else if (starts(markup.reasoning_marker)) {
        section = &current.reasoning_text;
        *section = std::string(
            detail::trim(stripped.substr(markup.reasoning_marker.size())));
      } else if (starts(markup.metadata_marker)) {
        section = &current.metadata_text;
        *section = std::string(
            detail::trim(stripped.substr(markup.metadata_marker.size())));
      } else if (starts(markup.next_marker)) {
        section = &current.next_action_text;
        *section = std::string(
            detail::trim(stripped.substr(markup.next_marker.size())));
      } else if (section != nullptr) {
        if (!section->empty()) section->push_back('\n');
        section->append(line);
      }
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  flush();

  if (blocks.empty())
    return ParseError{std::string(doc.substr(0, 120)), 0,
                      "step delimiter '" + markup.step_delimiter + "'"};
  return blocks;
}

struct RejectedAction {
  int step_index = 0;
  std::string slot;  // "executed_action" / "previous_action"
  std::string raw;
  ParseError error;
};

struct IngestedTrajectory {
  Trajectory trajectory;
  std::vector<RejectedAction> rejected;  // populated by the lenient variant
};

namespace detail {

inline IngestedTrajectory convert_blocks(const std::vector<RawStepBlock>& blocks,
                                         bool record_rejects) {
  IngestedTrajectory out;
  out.trajectory.kind = TrajectoryKind::AgentActual;
  for (const RawStepBlock& block : blocks) {
    Step step;
    step.index = int(out.trajectory.steps.size()) + 1;

    std::string_view prev = trim(block.previous_action_text);
    if (!prev.empty() && lowercase(prev) != "none") {
      ActionResult r = parse_action(prev);
      if (ok(r)) step.previous_action = action(r);
      // unparseable restatements stay absent; they are commentary, not state
    }

    step.reasoning = block.reasoning_text;
    step.declared_intent = extract_declared_intent(block.reasoning_text);

    ActionResult executed = parse_action(block.next_action_text);
    if (ok(executed)) {
      step.executed_action = action(executed);
    } else {
      step.executed_action = make::none();
      if (record_rejects)
        out.rejected.push_back({step.index, "executed_action",
                                block.next_action_text, error(executed)});
    }

    const bool is_stop = step.executed_action.kind == ActionKind::Stop;
    if (is_stop) out.trajectory.final_answer = step.executed_action.payload;
    out.trajectory.steps.push_back(std::move(step));
    if (is_stop) break;  // anything after a Stop is garbage; keep invariants
  }
  return out;
}

}  // namespace detail

inline Trajectory blocks_to_trajectory(const std::vector<RawStepBlock>& blocks) {
  return detail::convert_blocks(blocks, false).trajectory;
}

inline IngestedTrajectory blocks_to_trajectory_lenient(
    const std::vector<RawStepBlock>& blocks) {
  return detail::convert_blocks(blocks, true);
}

}  // namespace traceval::grammar
