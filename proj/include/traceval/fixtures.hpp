#pragma once

// Hand-built reference bundles with hand-checked metric values. The
// smartphones bundle is the worked example every metric is specified
// against; the border-states bundle pins the keyword-based partial score.

#include <string>

#include "traceval/core.hpp"
#include "traceval/grammar.hpp"

namespace traceval {

namespace detail {

inline Step agent_step(int index, const Action& intended,
                       const Action& executed,
                       const std::optional<Action>& previous) {
  Step s;
  s.index = index;
  s.previous_action = previous;
  s.reasoning =
      "Let's think step-by-step. Observing the page suggests the next move. "
      "In summary, the next action I will perform is ```" +
      grammar::render_action(intended) + "```";
  s.declared_intent = intended;
  s.executed_action = executed;
  return s;
}

}  // namespace detail

// One e-commerce task ("Show me all smartphones") with a 3-step human
// trajectory and a 6-step agent run that detours, scrolls, reaches the
// target and then re-clicks it. Hand-derived scores with the deterministic
// judge: step success 3/3, recovery 2/2, repetitiveness 1 - 2/6, element
// accuracy 5/6 (the planned final step differs), partial success n/a.
inline TrajectoryBundle canonical_fixture() {
  TrajectoryBundle bundle;
  bundle.task.task_id = 1;
  bundle.task.intent = "Show me all smartphones";
  bundle.task.domain = Domain::Ecommerce;
  bundle.task.solvable = true;

  const Action products = make::click("Products link");
  const Action electronics = make::click("Electronics category");
  const Action smartphones = make::click("Smartphones filter");
  const Action about = make::click("About Us link");
  const Action scroll_down = make::scroll(ScrollDirection::Down);
  const Action back = make::click("Back");

  bundle.gold = gold_from_actions({products, electronics, smartphones});

  Trajectory planned;
  planned.kind = TrajectoryKind::AgentPlanned;
  int pi = 0;
  for (const Action& a :
       {about, products, electronics, scroll_down, smartphones, back}) {
    Step s;
    s.index = ++pi;
    s.executed_action = a;
    planned.steps.push_back(std::move(s));
  }
  bundle.planned = planned;

  Trajectory actual;
  actual.kind = TrajectoryKind::AgentActual;
  const Action executed[] = {about,       products,    electronics,
                             scroll_down, smartphones, smartphones};
  std::optional<Action> previous;
  for (int i = 0; i < 6; ++i) {
    actual.steps.push_back(detail::agent_step(
        i + 1, planned.steps[size_t(i)].executed_action, executed[i], previous));
    previous = executed[i];
  }
  bundle.actual = std::move(actual);
  return bundle;
}

// Geography question with three answer requirements where the agent stops
// after naming only one: partial success 1/3.
inline TrajectoryBundle border_states_fixture() {
  TrajectoryBundle bundle;
  bundle.task.task_id = 2;
  bundle.task.intent = "Which US states border Connecticut?";
  bundle.task.domain = Domain::Map;
  bundle.task.requirements = {"Rhode Island", "Massachusetts", "New York"};
  bundle.task.reference_answer = "Rhode Island, Massachusetts, New York";
  bundle.task.solvable = true;

  Trajectory actual;
  actual.kind = TrajectoryKind::AgentActual;
  const Action search = make::click("Connecticut search result");
  const Action stop = make::stop("Massachusetts");
  actual.steps.push_back(detail::agent_step(1, search, search, std::nullopt));
  actual.steps.push_back(detail::agent_step(2, stop, stop, search));
  actual.final_answer = "Massachusetts";
  bundle.actual = std::move(actual);
  return bundle;
}

}  // namespace traceval
