#pragma once

// Planning-paradigm runners on top of the page-graph model. Three styles
// produce agent trajectories in the same log dialect real agents emit:
//   step-by-step  one committed action per observation, chosen by a policy
//   tree search   best-first over discovered states with a value function
//   full plan     a complete route is drafted up front and then executed,
//                 with optional one-shot replanning on divergence
// Also hosts the synthetic corpus generator used by the CLI and the tests.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "traceval/core.hpp"
#include "traceval/grammar.hpp"
#include "traceval/judge.hpp"
#include "traceval/metrics.hpp"
#include "traceval/sim.hpp"

namespace traceval::sim {

using metrics::Limits;

// A policy sees the current observation plus the usable actions on it and
// answers with raw DSL text; emitting garbage or an invisible target is
// allowed and becomes an invalid step, exactly like a real model output.
using Policy = std::function<std::string(
    const PageState&, const std::vector<Action>&, int, std::mt19937_64&)>;

using ValueFn = std::function<double(const PageState&)>;

struct DecisionRecord {
  int step_index = 0;
  std::string state_id;
  std::vector<std::string> candidates;  // action signatures offered
  std::vector<std::string> committed;   // raw DSL texts committed (always 1)
};

struct StepByStepRun {
  Trajectory trajectory;
  std::vector<DecisionRecord> decisions;
  bool reached_goal = false;
};

struct Expansion {
  std::string state_id;
  double value = 0.0;
  // frontier at the moment of the pick, sorted by state id
  std::vector<std::pair<std::string, double>> frontier_before;
};

struct TreeSearchRun {
  Trajectory trajectory;
  std::vector<Expansion> expansions;
  bool reached_goal = false;
};

struct FullPlanRun {
  Trajectory trajectory;
  bool reached_goal = false;
  int replans = 0;
  std::optional<int> first_divergence;  // step index of the first miss
};

namespace detail {

inline std::string action_text(const Action& a) {
  try {
    return grammar::render_action(a);
  } catch (const std::exception&) {
    return describe(a);
  }
}

inline std::string intent_sentence(const std::string& text) {
  return "In summary, the next action I will perform is ```" + text + "```";
}

inline void push_fragments(std::vector<std::string>& frags,
                           const PageState& obs) {
  for (const std::string& f : obs.answer_fragments)
    if (std::find(frags.begin(), frags.end(), f) == frags.end())
      frags.push_back(f);
}

inline std::string join_fragments(const std::vector<std::string>& frags) {
  std::string out;
  for (size_t i = 0; i < frags.size(); ++i) {
    if (i) out += ", ";
    out += frags[i];
  }
  return out;
}

inline std::optional<Action> chain_previous(const std::vector<Step>& steps) {
  if (steps.empty()) return std::nullopt;
  const Action& e = steps.back().executed_action;
  if (e.kind != ActionKind::None) return e;
  return std::nullopt;
}

inline int trailing_none(const std::vector<Step>& steps) {
  int n = 0;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (it->executed_action.kind == ActionKind::None)
      ++n;
    else
      break;
  }
  return n;
}

inline bool trailing_repeat_exceeds(const std::vector<Step>& steps,
                                    int max_repeat) {
  int run = 0;
  const Action* last = nullptr;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const Action& e = it->executed_action;
    if (e.kind == ActionKind::None) break;
    if (!last) {
      last = &e;
      run = 1;
      continue;
    }
    if (!deterministic_action_match(*last, e)) break;
    ++run;
  }
  return run > max_repeat;
}

inline std::string plan_note(const std::vector<Action>& plan, size_t cursor) {
  std::string out = "Following the plan [";
  for (size_t i = 0; i < plan.size(); ++i) {
    if (i) out += "; ";
    out += std::to_string(i + 1) + ") " + action_text(plan[i]);
  }
  out += "] at step " + std::to_string(cursor + 1) + ".";
  return out;
}

}  // namespace detail

inline StepByStepRun run_step_by_step(const StateGraph& g,
                                      const Policy& policy,
                                      const Limits& limits, uint64_t seed,
                                      const std::set<int64_t>& hidden = {}) {
  limits.validate();
  StepByStepRun run;
  run.trajectory.kind = TrajectoryKind::AgentActual;
  std::mt19937_64 rng(seed);
  EpisodeView view(g, hidden);
  std::vector<std::string> fragments;
  std::string state = g.start_state;
  std::vector<Step>& steps = run.trajectory.steps;

  for (int index = 1;; ++index) {
    PageState obs = view.observe(state);
    detail::push_fragments(fragments, obs);

    std::string text;
    std::string note;
    std::vector<std::string> candidate_sigs;
    if (obs.is_goal) {
      const std::string answer =
          fragments.empty() ? "done" : detail::join_fragments(fragments);
      text = grammar::render_action(make::stop(answer));
      note = "The page satisfies the task goal, so I can finish.";
    } else {
      std::vector<Action> candidates;
      for (const auto& [sig, edge] : g.outgoing(state)) {
        if (target_visible(obs, edge.action)) {
          candidates.push_back(edge.action);
          candidate_sigs.push_back(sig);
        }
      }
      if (candidates.empty()) {
        const std::string answer =
            fragments.empty() ? "N/A" : detail::join_fragments(fragments);
        text = grammar::render_action(make::stop(answer));
        note = "No usable control is left on this page, so I give up.";
      } else {
        text = policy(obs, candidates, index, rng);
        note = "The page offers " + std::to_string(candidates.size()) +
               " usable controls.";
      }
    }

    run.decisions.push_back(DecisionRecord{index, state, candidate_sigs, {text}});

    Step s;
    s.index = index;
    s.previous_action = detail::chain_previous(steps);
    s.reasoning = "Let's think step-by-step. " + note + " " +
                  detail::intent_sentence(text);
    std::optional<Action> parsed = grammar::parse_ok(text);
    s.declared_intent = parsed;
    if (!parsed)
      s.executed_action = make::none();
    else if (parsed->is_element_targeted() && !target_visible(obs, *parsed))
      s.executed_action = make::none();
    else
      s.executed_action = *parsed;
    steps.push_back(std::move(s));

    const Action& exec = steps.back().executed_action;
    if (exec.kind == ActionKind::Stop) {
      run.trajectory.final_answer = exec.payload;
      run.reached_goal = obs.is_goal;
      break;
    }
    if (detail::trailing_none(steps) >= limits.max_invalid) break;
    if (detail::trailing_repeat_exceeds(steps, limits.max_repeat)) break;
    if (index >= limits.max_steps) break;

    if (exec.kind != ActionKind::None)
      if (const Edge* e = find_edge(g, state, exec)) state = e->to;
  }
  return run;
}

// Best-first search: repeatedly expand the frontier state with the highest
// value (ties broken by smaller state id) until a goal is discovered, then
// walk the discovery tree back. The value function must rate goals at 1 and
// is evaluated once per discovered state.
inline TreeSearchRun run_tree_search(const StateGraph& g, const ValueFn& value,
                                     const Limits& limits) {
  limits.validate();
  TreeSearchRun run;
  run.trajectory.kind = TrajectoryKind::AgentActual;

  std::map<std::string, std::pair<std::string, Action>> parent;
  std::set<std::string> discovered{g.start_state};
  std::vector<std::pair<std::string, double>> frontier;
  auto val = [&](const std::string& id) { return value(g.states.at(id)); };

  std::optional<std::string> goal;
  if (g.is_goal(g.start_state))
    goal = g.start_state;
  else
    frontier.emplace_back(g.start_state, val(g.start_state));

  while (!goal) {
    if (frontier.empty())
      throw UnreachableGoal("search exhausted without reaching a goal");
    size_t best = 0;
    for (size_t i = 1; i < frontier.size(); ++i) {
      if (frontier[i].second > frontier[best].second ||
          (frontier[i].second == frontier[best].second &&
           frontier[i].first < frontier[best].first))
        best = i;
    }
    Expansion exp;
    exp.state_id = frontier[best].first;
    exp.value = frontier[best].second;
    exp.frontier_before = frontier;
    std::sort(exp.frontier_before.begin(), exp.frontier_before.end());
    run.expansions.push_back(std::move(exp));

    const std::string cur = frontier[best].first;
    frontier.erase(frontier.begin() + best);
    for (const auto& [sig, edge] : g.outgoing(cur)) {
      if (discovered.count(edge.to)) continue;
      discovered.insert(edge.to);
      parent.emplace(edge.to, std::make_pair(cur, edge.action));
      if (g.is_goal(edge.to)) {
        goal = edge.to;
        break;
      }
      frontier.emplace_back(edge.to, val(edge.to));
    }
  }

  std::vector<std::pair<Action, std::string>> hops;  // (action, state after)
  for (std::string cur = *goal; cur != g.start_state;) {
    const auto& [from, action] = parent.at(cur);
    hops.emplace_back(action, cur);
    cur = from;
  }
  std::reverse(hops.begin(), hops.end());

  std::vector<std::string> fragments;
  detail::push_fragments(fragments, g.states.at(g.start_state));
  std::vector<Step>& steps = run.trajectory.steps;
  for (const auto& [action, to] : hops) {
    if ((int)steps.size() >= limits.max_steps) return run;
    Step s;
    s.index = (int)steps.size() + 1;
    s.previous_action = detail::chain_previous(steps);
    const std::string text = detail::action_text(action);
    s.reasoning =
        "Let's think step-by-step. Value-guided search ranks this move "
        "highest from here. " +
        detail::intent_sentence(text);
    s.declared_intent = action;
    s.executed_action = action;
    steps.push_back(std::move(s));
    detail::push_fragments(fragments, g.states.at(to));
  }

  if ((int)steps.size() >= limits.max_steps) return run;
  const std::string answer =
      fragments.empty() ? "done" : detail::join_fragments(fragments);
  Action stop = make::stop(answer);
  const std::string text = grammar::render_action(stop);
  Step s;
  s.index = (int)steps.size() + 1;
  s.previous_action = detail::chain_previous(steps);
  s.reasoning = "Let's think step-by-step. The searched route ends on the "
                "goal page. " +
                detail::intent_sentence(text);
  s.declared_intent = stop;
  s.executed_action = std::move(stop);
  steps.push_back(std::move(s));
  run.trajectory.final_answer = answer;
  run.reached_goal = true;
  return run;
}

// Draft a complete route up front, then distort it: dropped steps first
// (1-based indices into the clean route), noise insertions second, in the
// order listed. An unreachable goal yields an empty plan.
inline Trajectory generate_full_plan(const StateGraph& g,
                                     const PlanPerturbation& p) {
  std::vector<Action> plan;
  if (std::optional<std::vector<Action>> route = plan_route(g, g.start_state))
    plan = std::move(*route);

  std::vector<int> drops = p.drop_steps;
  std::sort(drops.rbegin(), drops.rend());
  drops.erase(std::unique(drops.begin(), drops.end()), drops.end());
  for (int d : drops)
    if (d >= 1 && d <= (int)plan.size()) plan.erase(plan.begin() + (d - 1));
  for (const auto& [pos, a] : p.insert_noise) {
    const int at = std::clamp(pos, 1, (int)plan.size() + 1);
    plan.insert(plan.begin() + (at - 1), a);
  }

  Trajectory t;
  t.kind = TrajectoryKind::AgentPlanned;
  for (size_t i = 0; i < plan.size(); ++i) {
    Step s;
    s.index = (int)i + 1;
    s.executed_action = plan[i];
    t.steps.push_back(std::move(s));
  }
  return t;
}

// Execute a drafted plan. A plan step whose element target is absent from
// the current observation is a divergence: the step is recorded with the
// planned action as declared intent and nothing executed. With replanning
// enabled the route is rebuilt from the current state at most once;
// otherwise the episode halts there. A plan run to exhaustion ends with a
// terminal stop whose answer is the collected fragments, "done" on a goal
// page without fragments, or "N/A" off-goal.
inline FullPlanRun run_full_plan(const StateGraph& g, const Trajectory& planned,
                                 const Limits& limits, bool replan,
                                 const std::set<int64_t>& hidden = {}) {
  limits.validate();
  FullPlanRun run;
  run.trajectory.kind = TrajectoryKind::AgentActual;
  EpisodeView view(g, hidden);
  std::vector<std::string> fragments;
  std::vector<Step>& steps = run.trajectory.steps;
  std::string state = g.start_state;

  std::vector<Action> plan = planned.actions();
  size_t cursor = 0;
  int replans_left = replan ? 1 : 0;

  for (int index = 1;; ++index) {
    PageState obs = view.observe(state);
    detail::push_fragments(fragments, obs);

    if (obs.is_goal || cursor >= plan.size()) {
      std::string answer;
      std::string note;
      if (obs.is_goal) {
        answer = fragments.empty() ? "done" : detail::join_fragments(fragments);
        note = "The goal page is reached.";
      } else {
        answer = fragments.empty() ? "N/A" : detail::join_fragments(fragments);
        note = "The plan is exhausted.";
      }
      Action stop = make::stop(answer);
      const std::string text = grammar::render_action(stop);
      Step s;
      s.index = index;
      s.previous_action = detail::chain_previous(steps);
      s.reasoning = detail::plan_note(plan, cursor) + " " + note + " " +
                    detail::intent_sentence(text);
      s.declared_intent = stop;
      s.executed_action = std::move(stop);
      steps.push_back(std::move(s));
      run.trajectory.final_answer = answer;
      run.reached_goal = obs.is_goal;
      break;
    }

    const Action& next = plan[cursor];
    Step s;
    s.index = index;
    s.previous_action = detail::chain_previous(steps);
    const std::string text = detail::action_text(next);

    if (next.is_element_targeted() && !target_visible(obs, next)) {
      s.reasoning = detail::plan_note(plan, cursor) +
                    " The planned target is missing from this page. " +
                    detail::intent_sentence(text);
      s.declared_intent = next;
      s.executed_action = make::none();
      steps.push_back(std::move(s));
      if (!run.first_divergence) run.first_divergence = index;
      if (replans_left > 0) {
        --replans_left;
        ++run.replans;
        plan.clear();
        if (std::optional<std::vector<Action>> fresh = plan_route(g, state))
          plan = std::move(*fresh);
        cursor = 0;
      } else {
        break;
      }
    } else {
      s.reasoning = detail::plan_note(plan, cursor) +
                    " Executing the next planned step. " +
                    detail::intent_sentence(text);
      s.declared_intent = next;
      s.executed_action = next;
      steps.push_back(std::move(s));
      if (const Edge* e = find_edge(g, state, next)) state = e->to;
      ++cursor;
    }

    if (detail::trailing_none(steps) >= limits.max_invalid) break;
    if (detail::trailing_repeat_exceeds(steps, limits.max_repeat)) break;
    if (index >= limits.max_steps) break;
  }
  return run;
}

inline ValueFn distance_value(const StateGraph& g) {
  auto dist = std::make_shared<std::map<std::string, int>>(dist_to_goal(g));
  return [dist](const PageState& s) {
    auto it = dist->find(s.state_id);
    return it == dist->end() ? 0.0 : 1.0 / (1.0 + it->second);
  };
}

// Arbitrary but reproducible state values in [0, 0.95]; goals pin at 1 so
// the search contract holds no matter the seed.
inline ValueFn seeded_value(uint64_t seed) {
  return [seed](const PageState& s) {
    if (s.is_goal) return 1.0;
    uint64_t h = seed ^ 0xcbf29ce484222325ULL;
    for (char c : s.state_id)
      h = (h ^ (uint64_t)(unsigned char)c) * 0x100000001b3ULL;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return 0.95 * double(h >> 11) / double(1ULL << 53);
  };
}

inline Policy make_policy(const std::string& name, const StateGraph& g) {
  if (name == "shortest_path") {
    auto dist = std::make_shared<std::map<std::string, int>>(dist_to_goal(g));
    const StateGraph* graph = &g;
    return [dist, graph](const PageState& obs,
                         const std::vector<Action>& candidates, int,
                         std::mt19937_64&) -> std::string {
      const Action* pick = nullptr;
      int best = -1;
      for (const Action& c : candidates) {
        const Edge* e = find_edge(*graph, obs.state_id, c);
        if (!e) continue;
        auto it = dist->find(e->to);
        if (it == dist->end()) continue;
        if (best < 0 || it->second < best) {
          best = it->second;
          pick = &c;
        }
      }
      if (!pick) return "stop [N/A]";
      return detail::action_text(*pick);
    };
  }
  if (name == "first_candidate") {
    return [](const PageState&, const std::vector<Action>& candidates, int,
              std::mt19937_64&) -> std::string {
      if (candidates.empty()) return "stop [N/A]";
      return detail::action_text(candidates.front());
    };
  }
  if (name == "cycle") {
    return [](const PageState&, const std::vector<Action>& candidates,
              int step, std::mt19937_64&) -> std::string {
      if (candidates.empty()) return "stop [N/A]";
      return detail::action_text(candidates[(step - 1) % candidates.size()]);
    };
  }
  if (name == "random") {
    return [](const PageState&, const std::vector<Action>& candidates, int,
              std::mt19937_64& rng) -> std::string {
      if (candidates.empty()) return "stop [N/A]";
      return detail::action_text(candidates[rng() % candidates.size()]);
    };
  }
  if (name == "malformed") {
    // emits a direction argument the grammar rejects, on purpose
    return [](const PageState&, const std::vector<Action>&, int,
              std::mt19937_64&) -> std::string {
      return "scroll [direction=down]";
    };
  }
  if (name == "give_up") {
    return [](const PageState&, const std::vector<Action>&, int,
              std::mt19937_64&) -> std::string { return "stop [N/A]"; };
  }
  throw std::invalid_argument("unknown policy '" + name + "'");
}

struct SimOptions {
  Limits limits;
  uint64_t seed = 0;
  std::optional<std::string> paradigm_override;
  std::optional<bool> replan_override;
};

inline TrajectoryBundle simulate_scenario(const Scenario& sc,
                                          const SimOptions& opt = {}) {
  TrajectoryBundle b;
  b.task = sc.task;
  try {
    b.gold = gold_trajectory(sc.graph);
  } catch (const UnreachableGoal&) {
  }

  const std::string paradigm = opt.paradigm_override.value_or(sc.paradigm);
  const bool replan = opt.replan_override.value_or(sc.replan);

  if (paradigm == "full_plan") {
    Trajectory plan = generate_full_plan(sc.graph, sc.perturbation);
    b.actual = run_full_plan(sc.graph, plan, opt.limits, replan,
                             sc.perturbation.dynamic_reveal)
                   .trajectory;
    b.planned = std::move(plan);
  } else if (paradigm == "step_by_step") {
    b.actual = run_step_by_step(sc.graph, make_policy(sc.policy, sc.graph),
                                opt.limits, opt.seed,
                                sc.perturbation.dynamic_reveal)
                   .trajectory;
  } else if (paradigm == "tree_search") {
    b.actual =
        run_tree_search(sc.graph, distance_value(sc.graph), opt.limits)
            .trajectory;
  } else {
    throw std::invalid_argument("unknown paradigm '" + paradigm + "'");
  }
  return b;
}

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Synthetic corpora. Five behaviour profiles land on the five terminal
// outcomes under the default limits; two extra profiles carry plan
// perturbations for robustness smoke runs.

enum class SynthProfile {
  Clean,       // full plan executes to the goal -> answer produced
  Unsolvable,  // no route exists -> immediate honest "N/A"
  Repeater,    // step policy hammers one control -> repeat limit
  Malformed,   // step policy emits unparseable text -> invalid limit
  Wanderer,    // step policy circles a ring -> step limit
  NoisyPlan,   // plan salted with no-op noise, still reaches the goal
  DropReplan,  // plan missing one step, recovered by a single replan
};

namespace detail {

// Linear site: s0 -> s1 -> ... -> s<hops> (goal), one link per page plus a
// dead-end decoy, answer fragments and matching requirements on the goal.
inline StateGraph chain_graph(int hops, uint64_t tag,
                              std::vector<std::string>* fragments_out) {
  StateGraph g;
  g.start_state = "s0";
  const std::vector<std::string> frags = {
      "item alpha-" + std::to_string(tag % 89),
      "item beta-" + std::to_string(tag % 71)};
  if (fragments_out) *fragments_out = frags;

  for (int i = 0; i <= hops; ++i) {
    PageState s;
    s.state_id = "s" + std::to_string(i);
    if (i == hops) {
      s.is_goal = true;
      s.answer_fragments = frags;
    } else {
      s.elements.push_back(Element{10 * (i + 1) + 1, "link",
                                   "open section " + std::to_string(i + 1),
                                   {}});
      s.elements.push_back(Element{10 * (i + 1) + 2, "link",
                                   "detour " + std::to_string(i + 1), {}});
    }
    g.add_state(std::move(s));
  }
  for (int i = 0; i < hops; ++i) {
    const std::string from = "s" + std::to_string(i);
    g.add_edge(from,
               make::click(10 * (i + 1) + 1,
                           "open section " + std::to_string(i + 1)),
               "s" + std::to_string(i + 1));
    PageState dead;
    dead.state_id = "d" + std::to_string(i);
    g.add_state(std::move(dead));
    g.add_edge(from,
               make::click(10 * (i + 1) + 2, "detour " + std::to_string(i + 1)),
               "d" + std::to_string(i));
  }
  return g;
}

inline TaskSpec synth_task(int64_t id, SynthProfile profile,
                           const std::vector<std::string>& fragments,
                           bool solvable) {
  TaskSpec t;
  t.task_id = id;
  t.domain = Domain::Synthetic;
  t.solvable = solvable;
  t.requirements = fragments;
  switch (profile) {
    case SynthProfile::Clean:
      t.intent = "Collect the listed catalog facts";
      break;
    case SynthProfile::Unsolvable:
      t.intent = "Find a page that was removed from this site";
      break;
    case SynthProfile::Repeater:
      t.intent = "Collect the listed feed facts";
      break;
    case SynthProfile::Malformed:
      t.intent = "Collect the listed archive facts";
      break;
    case SynthProfile::Wanderer:
      t.intent = "Find the missing report in the carousel";
      break;
    case SynthProfile::NoisyPlan:
      t.intent = "Collect the listed catalog facts despite distractions";
      break;
    case SynthProfile::DropReplan:
      t.intent = "Collect the listed catalog facts from a stale plan";
      break;
  }
  t.intent += " (case " + std::to_string(id) + ")";
  return t;
}

}  // namespace detail

inline Scenario synth_scenario(SynthProfile profile, int64_t task_id,
                               uint64_t seed) {
  uint64_t s = seed;
  const uint64_t tag = splitmix64(s);
  const int hops = 3 + (int)(splitmix64(s) % 4);  // 3..6 steps to the goal
  Scenario sc;
  std::vector<std::string> fragments;

  switch (profile) {
    case SynthProfile::Clean: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      sc.paradigm = "full_plan";
      sc.task = detail::synth_task(task_id, profile, fragments, true);
      break;
    }
    case SynthProfile::Unsolvable: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      // sever the chain one hop before the goal
      const std::string from = "s" + std::to_string(hops - 1);
      sc.graph.edges[from].erase(
          signature(make::click(10 * hops + 1,
                                "open section " + std::to_string(hops))));
      sc.paradigm = "full_plan";
      sc.task = detail::synth_task(task_id, profile, fragments, false);
      break;
    }
    case SynthProfile::Repeater: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      // a refresh control that sorts first and leads nowhere new
      sc.graph.states.at("s0").elements.insert(
          sc.graph.states.at("s0").elements.begin(),
          Element{1, "button", "refresh results", {}});
      sc.graph.add_edge("s0", make::click(1, "refresh results"), "s0");
      sc.paradigm = "step_by_step";
      sc.policy = "first_candidate";
      sc.task = detail::synth_task(task_id, profile, fragments, true);
      break;
    }
    case SynthProfile::Malformed: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      sc.paradigm = "step_by_step";
      sc.policy = "malformed";
      sc.task = detail::synth_task(task_id, profile, fragments, true);
      break;
    }
    case SynthProfile::Wanderer: {
      StateGraph g;
      g.start_state = "r0";
      const int ring = 3 + (int)(tag % 3);  // 3..5 pages, no exit
      for (int i = 0; i < ring; ++i) {
        PageState p;
        p.state_id = "r" + std::to_string(i);
        p.elements.push_back(Element{10 * (i + 1) + 1, "link",
                                     "next page " + std::to_string(i + 1),
                                     {}});
        g.add_state(std::move(p));
      }
      PageState marooned;
      marooned.state_id = "z_goal";
      marooned.is_goal = true;
      g.add_state(std::move(marooned));
      for (int i = 0; i < ring; ++i)
        g.add_edge("r" + std::to_string(i),
                   make::click(10 * (i + 1) + 1,
                               "next page " + std::to_string(i + 1)),
                   "r" + std::to_string((i + 1) % ring));
      sc.graph = std::move(g);
      sc.paradigm = "step_by_step";
      sc.policy = "first_candidate";
      fragments = {"item alpha-" + std::to_string(tag % 89),
                   "item beta-" + std::to_string(tag % 71)};
      sc.task = detail::synth_task(task_id, profile, fragments, false);
      break;
    }
    case SynthProfile::NoisyPlan: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      sc.paradigm = "full_plan";
      sc.perturbation.insert_noise.emplace_back(
          2, make::scroll(ScrollDirection::Down));
      sc.perturbation.insert_noise.emplace_back((int)(tag % hops) + 2,
                                                make::press("ctrl+f"));
      sc.task = detail::synth_task(task_id, profile, fragments, true);
      break;
    }
    case SynthProfile::DropReplan: {
      sc.graph = detail::chain_graph(hops, tag, &fragments);
      sc.paradigm = "full_plan";
      sc.replan = true;
      sc.perturbation.drop_steps.push_back(hops / 2 + 1);
      sc.task = detail::synth_task(task_id, profile, fragments, true);
      break;
    }
  }
  return sc;
}

// Outcome-partition corpus: profiles cycle Clean, Unsolvable, Repeater,
// Malformed, Wanderer so every terminal outcome is represented with a known
// count for any corpus size.
inline std::vector<Scenario> synthesize_corpus(int count, uint64_t seed) {
  static const SynthProfile kCycle[] = {
      SynthProfile::Clean, SynthProfile::Unsolvable, SynthProfile::Repeater,
      SynthProfile::Malformed, SynthProfile::Wanderer};
  std::vector<Scenario> out;
  out.reserve(count);
  uint64_t s = seed;
  for (int i = 0; i < count; ++i)
    out.push_back(synth_scenario(kCycle[i % 5], i + 1, splitmix64(s)));
  return out;
}

// Perturbation smoke corpus: noisy plans and dropped-step replans only.
inline std::vector<Scenario> synthesize_perturbed_corpus(int count,
                                                         uint64_t seed) {
  std::vector<Scenario> out;
  out.reserve(count);
  uint64_t s = seed;
  for (int i = 0; i < count; ++i) {
    const SynthProfile p =
        i % 2 == 0 ? SynthProfile::NoisyPlan : SynthProfile::DropReplan;
    out.push_back(synth_scenario(p, i + 1, splitmix64(s)));
  }
  return out;
}

// Random connected-ish graphs for property tests: every state gets one to
// three outgoing clicks to arbitrary states, the last state is the goal.
// Some seeds leave the goal unreachable on purpose.
inline StateGraph random_graph(uint64_t seed, int max_states) {
  if (max_states < 2) throw std::invalid_argument("need at least two states");
  uint64_t s = seed;
  const int n = 2 + (int)(splitmix64(s) % (uint64_t)(max_states - 1));
  StateGraph g;
  g.start_state = "q00";

  auto state_name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "q%02d", i);
    return std::string(buf);
  };

  for (int i = 0; i < n; ++i) {
    PageState p;
    p.state_id = state_name(i);
    if (i == n - 1) {
      p.is_goal = true;
      p.answer_fragments.push_back("token " + std::to_string(splitmix64(s) % 997));
    }
    g.add_state(std::move(p));
  }
  int64_t next_element = 1;
  for (int i = 0; i < n - 1; ++i) {
    const int fan = 1 + (int)(splitmix64(s) % 3);
    for (int k = 0; k < fan; ++k) {
      const int to = (int)(splitmix64(s) % (uint64_t)n);
      if (to == i) continue;
      const int64_t id = next_element++;
      const std::string label = "nav " + std::to_string(i) + " to " +
                                std::to_string(to) + " link";
      g.states.at(state_name(i))
          .elements.push_back(Element{id, "link", label, {}});
      g.add_edge(state_name(i), make::click(id, label), state_name(to));
    }
  }
  return g;
}

}  // namespace traceval::sim
