#pragma once

// Deterministic page-graph world model for the planning simulator. Pages
// are states with interactive elements; edges are keyed by (state id,
// action signature). Tasks are solved by reaching any goal state while
// collecting answer fragments along the way.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "traceval/core.hpp"

namespace traceval::sim {

struct Element {
  int64_t element_id = 0;
  std::string role;   // link, button, textbox, option, ...
  std::string label;
  std::map<std::string, std::string> properties;
};

struct PageState {
  std::string state_id;
  std::vector<Element> elements;
  bool is_goal = false;
  std::vector<std::string> answer_fragments;
};

struct Edge {
  Action action;
  std::string to;
};

struct StateGraph {
  std::map<std::string, PageState> states;
  // from -> action signature -> edge; std::map keeps iteration order
  // deterministic and gives lexicographic tie-breaking for free.
  std::map<std::string, std::map<std::string, Edge>> edges;
  std::string start_state;

  PageState& add_state(PageState s) {
    return states[s.state_id] = std::move(s);
  }

  void add_edge(const std::string& from, const Action& action,
                const std::string& to) {
    edges[from][signature(action)] = Edge{action, to};
  }

  bool is_goal(const std::string& id) const {
    auto it = states.find(id);
    return it != states.end() && it->second.is_goal;
  }

  std::vector<std::string> goal_states() const {
    std::vector<std::string> out;
    for (const auto& [id, s] : states)
      if (s.is_goal) out.push_back(id);
    return out;
  }

  const std::map<std::string, Edge>& outgoing(const std::string& id) const {
    static const std::map<std::string, Edge> kEmpty;
    auto it = edges.find(id);
    return it == edges.end() ? kEmpty : it->second;
  }
};

// Noise/omission/reveal knobs applied on top of a scenario graph.
struct PlanPerturbation {
  std::vector<int> drop_steps;                         // 1-based plan indices
  std::vector<std::pair<int, Action>> insert_noise;    // (position, action)
  std::set<int64_t> dynamic_reveal;  // element ids hidden on first visit

  bool empty() const {
    return drop_steps.empty() && insert_noise.empty() && dynamic_reveal.empty();
  }
};

struct Scenario {
  TaskSpec task;
  StateGraph graph;
  PlanPerturbation perturbation;
  std::string paradigm = "full_plan";  // full_plan | step_by_step | tree_search
  std::string policy = "shortest_path";
  bool replan = false;
};

struct UnreachableGoal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool target_visible(const PageState& obs, const Action& a) {
  if (!a.is_element_targeted()) return true;
  for (const Element& e : obs.elements) {
    if (a.target_id && e.element_id == *a.target_id) return true;
    if (!a.target_id && a.target_label &&
        text_equal_normalized(e.label, *a.target_label))
      return true;
  }
  return false;
}

// Edge lookup for an attempted action. Planner-emitted DSL text loses
// labels, so after the exact signature the match is id-first: ids decide
// when both sides have one, labels otherwise.
inline bool execution_matches(const Action& edge, const Action& attempted) {
  if (edge.kind != attempted.kind) return false;
  if (edge.is_element_targeted()) {
    if (edge.target_id && attempted.target_id) {
      if (*edge.target_id != *attempted.target_id) return false;
    } else if (edge.target_label && attempted.target_label) {
      if (!text_equal_normalized(*edge.target_label, *attempted.target_label))
        return false;
    } else {
      return false;
    }
  }
  switch (edge.kind) {
    case ActionKind::Type:
      return detail::opt_text_equal(edge.payload, attempted.payload) &&
             edge.effective_press_enter() == attempted.effective_press_enter();
    case ActionKind::Press:
    case ActionKind::Goto:
      return detail::opt_text_equal(edge.payload, attempted.payload);
    case ActionKind::Scroll:
      return edge.direction == attempted.direction;
    case ActionKind::TabFocus:
      return edge.target_id == attempted.target_id;
    default:
      return true;
  }
}

inline const Edge* find_edge(const StateGraph& g, const std::string& state,
                             const Action& attempted) {
  auto st = g.edges.find(state);
  if (st == g.edges.end()) return nullptr;
  auto exact = st->second.find(signature(attempted));
  if (exact != st->second.end()) return &exact->second;
  for (const auto& [sig, edge] : st->second)
    if (execution_matches(edge.action, attempted)) return &edge;
  return nullptr;
}

// BFS distance from every state to the nearest goal (over reversed edges);
// absent entries are unreachable.
inline std::map<std::string, int> dist_to_goal(const StateGraph& g) {
  std::map<std::string, std::vector<std::string>> reverse;
  for (const auto& [from, out] : g.edges)
    for (const auto& [sig, edge] : out) reverse[edge.to].push_back(from);

  std::map<std::string, int> dist;
  std::vector<std::string> frontier;
  for (const auto& [id, s] : g.states) {
    if (s.is_goal) {
      dist[id] = 0;
      frontier.push_back(id);
    }
  }
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const std::string& u : frontier) {
      auto rit = reverse.find(u);
      if (rit == reverse.end()) continue;
      for (const std::string& p : rit->second) {
        if (dist.count(p)) continue;
        dist[p] = dist[u] + 1;
        next.push_back(p);
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

// Shortest action route from a state to the nearest goal, deterministic:
// at every hop take the lexicographically smallest action signature that
// still decreases the distance. Nullopt when no goal is reachable.
inline std::optional<std::vector<Action>> plan_route(const StateGraph& g,
                                                     const std::string& from) {
  std::map<std::string, int> dist = dist_to_goal(g);
  auto here = dist.find(from);
  if (here == dist.end()) return std::nullopt;
  std::vector<Action> route;
  std::string cur = from;
  while (!g.is_goal(cur)) {
    const int d = dist.at(cur);
    const Edge* step = nullptr;
    for (const auto& [sig, edge] : g.outgoing(cur)) {
      auto dt = dist.find(edge.to);
      if (dt != dist.end() && dt->second == d - 1) {
        step = &edge;
        break;  // map iteration is already in signature order
      }
    }
    if (!step) throw UnreachableGoal("distance map inconsistent at " + cur);
    route.push_back(step->action);
    cur = step->to;
  }
  return route;
}

// The reference trajectory: shortest route from the start, executed steps
// only. Start-at-goal yields an empty trajectory; an unreachable goal
// throws.
inline Trajectory gold_trajectory(const StateGraph& g) {
  std::optional<std::vector<Action>> route = plan_route(g, g.start_state);
  if (!route)
    throw UnreachableGoal("no goal reachable from " + g.start_state);
  return gold_from_actions(*route);
}

// Structural checks for loaded scenarios; returns human-readable problems.
inline std::vector<std::string> validate_graph(const StateGraph& g,
                                               bool expect_solvable) {
  std::vector<std::string> problems;
  if (!g.states.count(g.start_state))
    problems.push_back("start state '" + g.start_state + "' is not defined");
  for (const auto& [from, out] : g.edges) {
    if (!g.states.count(from)) {
      problems.push_back("edge source '" + from + "' is not defined");
      continue;
    }
    const PageState& src = g.states.at(from);
    for (const auto& [sig, edge] : out) {
      if (!g.states.count(edge.to))
        problems.push_back("edge target '" + edge.to + "' is not defined");
      if (edge.action.is_element_targeted() && !target_visible(src, edge.action))
        problems.push_back("edge action '" + sig + "' from '" + from +
                           "' references no element of that state");
    }
  }
  if (expect_solvable) {
    if (g.goal_states().empty()) {
      problems.push_back("solvable task has no goal state");
    } else if (g.states.count(g.start_state)) {
      std::map<std::string, int> dist = dist_to_goal(g);
      if (!dist.count(g.start_state))
        problems.push_back("solvable task cannot reach a goal from '" +
                           g.start_state + "'");
    }
  }
  return problems;
}

// Episode-scoped observation with delayed element reveal: ids listed in
// dynamic_reveal are missing from the first observation of their state and
// visible from the second one on.
class EpisodeView {
 public:
  EpisodeView(const StateGraph& graph, std::set<int64_t> hidden)
      : graph_(graph), hidden_(std::move(hidden)) {}

  PageState observe(const std::string& state_id) {
    PageState out = graph_.states.at(state_id);
    const bool first = !revealed_.count(state_id);
    revealed_.insert(state_id);
    if (first && !hidden_.empty()) {
      auto drop = std::remove_if(out.elements.begin(), out.elements.end(),
                                 [&](const Element& e) {
                                   return hidden_.count(e.element_id) > 0;
                                 });
      out.elements.erase(drop, out.elements.end());
    }
    return out;
  }

 private:
  const StateGraph& graph_;
  std::set<int64_t> hidden_;
  std::set<std::string> revealed_;
};

}  // namespace traceval::sim
