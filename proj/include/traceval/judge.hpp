#pragma once

// Action-equivalence judging. Two interchangeable backends behind one
// config: a deterministic local matcher (normalization + field agreement,
// scores in {0,1}) and a remote LLM endpoint (see remote.hpp). Trajectory
// matching, repetition detection and keyword satisfaction build on pairwise
// equivalence and work identically under either backend.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "traceval/core.hpp"
#include "traceval/grammar.hpp"

namespace traceval {

enum class JudgeSource { Deterministic, Remote, Cache };
enum class JudgeBackendKind { Deterministic, Remote };

struct JudgeVerdict {
  double score = 0.0;
  bool equivalent = false;  // score >= threshold
  std::optional<std::string> explanation;
  JudgeSource source = JudgeSource::Deterministic;
};

// Remote model parameters are metadata: they ride along in requests and in
// serialized run configs but are never interpreted locally.
struct RemoteModelInfo {
  std::string model = "gpt-4-turbo";
  double temperature = 1.0;
  double top_p = 0.95;
};

struct JudgeConfig {
  JudgeBackendKind backend = JudgeBackendKind::Deterministic;
  double threshold = 1.0;   // score >= threshold counts as equivalent
  std::string endpoint;     // http://host:port/path, remote only
  std::string auth_token;   // bearer credential, usually from env
  bool cache_enabled = true;
  int max_pair_window = 5;  // recorded matching window (config metadata)
  int max_inflight = 4;     // concurrent remote requests
  std::string prompt_version = "v1";
  RemoteModelInfo model;
};

struct JudgeError : std::runtime_error {
  std::optional<std::string> raw_reply;
  explicit JudgeError(const std::string& what,
                      std::optional<std::string> reply = std::nullopt)
      : std::runtime_error(what), raw_reply(std::move(reply)) {}
};

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // 1-based (gold, agent), monotone
  std::vector<int> unmatched_gold;
  std::vector<int> unmatched_agent;
};

struct RepetitionRun {
  int first = 0;  // 1-based inclusive
  int last = 0;
  bool operator==(const RepetitionRun&) const = default;
};

struct RepetitionReport {
  int count = 0;  // every member of every run counts
  std::vector<RepetitionRun> runs;
};

namespace detail {

// Target identity: labels win when both sides have one (numeric ids differ
// across runs and are ignored); ids are compared only when neither side has
// a label; a one-sided label never matches.
inline bool target_identity(const Action& a, const Action& b) {
  const bool la = a.target_label.has_value();
  const bool lb = b.target_label.has_value();
  if (la && lb) return text_equal_normalized(*a.target_label, *b.target_label);
  if (la != lb) return false;
  return a.target_id == b.target_id;
}

}  // namespace detail

// Pure deterministic equivalence; kept as a free function because outcome
// classification and the simulator need it without a Judge instance.
inline bool deterministic_action_match(const Action& a, const Action& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ActionKind::Click:
    case ActionKind::Hover:
      return detail::target_identity(a, b);
    case ActionKind::Type:
      return detail::target_identity(a, b) &&
             detail::opt_text_equal(a.payload, b.payload) &&
             a.effective_press_enter() == b.effective_press_enter();
    case ActionKind::Press:
    case ActionKind::Goto:
    case ActionKind::Stop:
      return detail::opt_text_equal(a.payload, b.payload);
    case ActionKind::Scroll:
      return a.direction == b.direction;
    case ActionKind::TabFocus:
      return a.target_id == b.target_id;
    case ActionKind::NewTab:
    case ActionKind::CloseTab:
    case ActionKind::GoBack:
    case ActionKind::GoForward:
    case ActionKind::None:
      return true;
  }
  return false;
}

// Run detection shared by the judge and the outcome classifier: maximal runs
// of consecutive pairwise-matching actions. Invalid steps (kind None) break
// runs and never join them; they belong to the invalid-action limit instead.
template <class Matcher>
inline RepetitionReport repetition_runs(const std::vector<Action>& actions,
                                        Matcher&& matches) {
  RepetitionReport out;
  size_t i = 0;
  while (i < actions.size()) {
    if (actions[i].kind == ActionKind::None) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < actions.size() &&
           actions[j + 1].kind != ActionKind::None &&
           matches(actions[j], actions[j + 1]))
      ++j;
    if (j > i) {
      out.count += int(j - i + 1);
      out.runs.push_back({int(i + 1), int(j + 1)});
    }
    i = j + 1;
  }
  return out;
}

// Remote transport interface; the HTTP implementation lives in remote.hpp
// so deterministic-only translation units stay light.
class RemoteBackend {
 public:
  virtual ~RemoteBackend() = default;
  virtual JudgeVerdict pair_verdict(const Action& a, const Action& b) = 0;
  virtual std::map<std::string, bool> keywords(
      const std::string& answer, const std::vector<std::string>& reqs) = 0;
};

class Judge {
 public:
  explicit Judge(JudgeConfig cfg, std::shared_ptr<RemoteBackend> remote = nullptr)
      : cfg_(std::move(cfg)), remote_(std::move(remote)) {
    if (cfg_.threshold < 0.0 || cfg_.threshold > 1.0)
      throw std::invalid_argument("judge threshold must be in [0, 1]");
    if (cfg_.max_pair_window < 1)
      throw std::invalid_argument("max_pair_window must be >= 1");
    if (cfg_.max_inflight < 1)
      throw std::invalid_argument("max_inflight must be >= 1");
    if (cfg_.backend == JudgeBackendKind::Remote && !remote_)
      throw std::invalid_argument(
          "remote judge requires a backend; construct via make_judge()");
  }

  const JudgeConfig& config() const { return cfg_; }

  JudgeVerdict equivalent(const Action& a, const Action& b) const {
    if (cfg_.backend == JudgeBackendKind::Deterministic) {
      JudgeVerdict v;
      v.score = deterministic_action_match(a, b) ? 1.0 : 0.0;
      v.equivalent = v.score >= cfg_.threshold;
      v.source = JudgeSource::Deterministic;
      return v;
    }
    JudgeVerdict v = remote_->pair_verdict(a, b);
    v.equivalent = v.score >= cfg_.threshold;
    return v;
  }

  // Greedy order-preserving alignment: for each gold step in order, the
  // first equivalent agent step strictly after the previously matched one.
  // A gold step repeated k times therefore needs k distinct agent steps.
  MatchResult match_trajectories(const Trajectory& gold,
                                 const Trajectory& agent) const {
    if (gold.kind != TrajectoryKind::HumanGold)
      throw std::invalid_argument("match_trajectories: gold side must be human_gold");
    if (agent.kind != TrajectoryKind::AgentActual)
      throw std::invalid_argument("match_trajectories: agent side must be agent_actual");
    MatchResult r;
    const auto& gs = gold.steps;
    const auto& as = agent.steps;
    r.pairs.reserve(gs.size() < as.size() ? gs.size() : as.size());
    size_t cursor = 0;
    std::vector<char> used(as.size(), 0);
    for (size_t g = 0; g < gs.size(); ++g) {
      bool found = false;
      for (size_t a = cursor; a < as.size(); ++a) {
        if (pair_matches(gs[g].executed_action, as[a].executed_action)) {
          r.pairs.emplace_back(int(g + 1), int(a + 1));
          used[a] = 1;
          cursor = a + 1;
          found = true;
          break;
        }
      }
      if (!found) r.unmatched_gold.push_back(int(g + 1));
    }
    for (size_t a = 0; a < as.size(); ++a)
      if (!used[a]) r.unmatched_agent.push_back(int(a + 1));
    return r;
  }

  RepetitionReport detect_repetitions(const Trajectory& t) const {
    std::vector<Action> actions = t.actions();
    return repetition_runs(actions, [&](const Action& a, const Action& b) {
      return pair_matches(a, b);
    });
  }

  // Which required keywords does the answer state? Deterministic backend:
  // normalized substring containment. Result keys are the original
  // requirement strings.
  std::map<std::string, bool> keyword_satisfaction(
      const std::string& answer, const std::vector<std::string>& reqs) const {
    if (reqs.empty())
      throw std::invalid_argument("keyword_satisfaction requires keywords");
    if (cfg_.backend == JudgeBackendKind::Remote)
      return remote_->keywords(answer, reqs);
    std::map<std::string, bool> out;
    const std::string norm_answer = normalize_text(answer);
    for (const std::string& req : reqs) {
      const std::string norm_req = normalize_text(req);
      out[req] = !norm_req.empty() &&
                 norm_answer.find(norm_req) != std::string::npos;
    }
    return out;
  }

 private:
  bool pair_matches(const Action& a, const Action& b) const {
    if (cfg_.backend == JudgeBackendKind::Deterministic) {
      const double score = deterministic_action_match(a, b) ? 1.0 : 0.0;
      return score >= cfg_.threshold;
    }
    return remote_->pair_verdict(a, b).score >= cfg_.threshold;
  }

  JudgeConfig cfg_;
  std::shared_ptr<RemoteBackend> remote_;
};

// Action text sent to the remote judge: DSL rendering plus the element
// description suffix when both id and label are known; unrenderable actions
// fall back to the plain description; a failed execution renders as "None".
inline std::string render_for_judge(const Action& a) {
  if (a.kind == ActionKind::None) return "None";
  std::string base;
  try {
    base = grammar::render_action(a);
  } catch (const std::invalid_argument&) {
    return describe(a);
  }
  if (a.target_id && a.target_label)
    base += " where [" + std::to_string(*a.target_id) + "] is '" +
            *a.target_label + "'";
  return base;
}

}  // namespace traceval
