#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "traceval/fixtures.hpp"
#include "traceval/judge.hpp"
#include "traceval/metrics.hpp"

#include "oracles.hpp"

using namespace traceval;
using namespace traceval::metrics;
using Catch::Approx;

namespace {

const Judge kJudge{JudgeConfig{}};

Trajectory agent_from_actions(const std::vector<Action>& actions) {
  Trajectory t;
  t.kind = TrajectoryKind::AgentActual;
  int i = 0;
  for (const Action& a : actions) {
    Step s;
    s.index = ++i;
    s.executed_action = a;
    t.steps.push_back(std::move(s));
  }
  if (const Action* stop = t.terminal_stop()) t.final_answer = stop->payload;
  return t;
}

TrajectoryBundle bundle_of(const std::vector<Action>& gold,
                           const std::vector<Action>& agent) {
  TrajectoryBundle b;
  b.task.task_id = 99;
  if (!gold.empty()) b.gold = gold_from_actions(gold);
  b.actual = agent_from_actions(agent);
  return b;
}

}  // namespace

TEST_CASE("the smartphones fixture scores exactly as documented") {
  const TrajectoryBundle bundle = canonical_fixture();

  StepSuccess ssr = step_success_rate(bundle, kJudge);
  REQUIRE(ssr.score.has_value());
  CHECK(*ssr.score == Approx(1.0).margin(1e-9));
  CHECK(ssr.match.pairs.size() == 3);

  Recovery rec = recovery_rate(bundle, kJudge);
  REQUIRE(rec.score.has_value());
  CHECK(*rec.score == Approx(1.0).margin(1e-9));
  CHECK(rec.incidents == 2);
  CHECK(rec.recoveries == 2);
  REQUIRE(rec.log.size() == 2);
  CHECK(rec.log[0].first_step == 1);   // the About Us detour
  CHECK(rec.log[0].recovery_step == 2);
  CHECK(rec.log[0].matched_gold == 1);
  CHECK(rec.log[1].first_step == 4);   // the scroll
  CHECK(rec.log[1].recovery_step == 5);
  CHECK(rec.log[1].matched_gold == 3);

  Repetitiveness rep = repetitiveness_rate(bundle, kJudge);
  REQUIRE(rep.score.has_value());
  CHECK(*rep.score == Approx(2.0 / 3.0).margin(1e-9));  // 1 - 2/6
  CHECK(rep.repeated == 2);
  REQUIRE(rep.runs == std::vector<RepetitionRun>{{5, 6}});

  ElementAccuracy ea = element_accuracy_rate(bundle, kJudge);
  REQUIRE(ea.score.has_value());
  CHECK(*ea.score == Approx(5.0 / 6.0).margin(1e-9));
  CHECK(ea.coverage == Approx(1.0).margin(1e-9));
  CHECK(ea.considered == 6);
  CHECK(ea.agreements == 5);

  PartialSuccess ps = partial_success_rate(bundle, kJudge);
  CHECK_FALSE(ps.score.has_value());  // no answer requirements on this task

  OutcomeClass outcome = classify_outcome(bundle);
  CHECK(outcome == OutcomeClass{OutcomeKind::NA, std::nullopt});

  TaskScores s = score_task(bundle, kJudge);
  CHECK(s.task_id == 1);
  CHECK(s.domain == Domain::Ecommerce);
  CHECK(s.gold_len == 3);
  CHECK(s.agent_len == 6);
  CHECK(s.has_gold);
  CHECK(s.deviation_incidents == 2);
  CHECK(s.recoveries == 2);
  CHECK(*s.step_success == Approx(1.0).margin(1e-9));
  CHECK(*s.recovery == Approx(1.0).margin(1e-9));
  CHECK(*s.repetitiveness == Approx(2.0 / 3.0).margin(1e-9));
  CHECK(*s.element_accuracy == Approx(5.0 / 6.0).margin(1e-9));
  CHECK_FALSE(s.partial_success.has_value());
  CHECK(s.element_coverage == Approx(1.0).margin(1e-9));
}

TEST_CASE("step success counts matched gold steps") {
  const Action x = make::click("x"), y = make::click("y"), z = make::click("z");

  StepSuccess two_of_three = step_success_rate(bundle_of({x, y, z}, {x, z}), kJudge);
  CHECK(*two_of_three.score == Approx(2.0 / 3.0).margin(1e-9));

  StepSuccess empty_agent = step_success_rate(bundle_of({x, y}, {}), kJudge);
  CHECK(*empty_agent.score == Approx(0.0).margin(1e-9));

  StepSuccess no_gold = step_success_rate(bundle_of({}, {x}), kJudge);
  CHECK_FALSE(no_gold.score.has_value());

  // order matters: the agent doing gold backwards only matches one step
  StepSuccess backwards = step_success_rate(bundle_of({x, y}, {y, x}), kJudge);
  CHECK(*backwards.score == Approx(0.5).margin(1e-9));
}

TEST_CASE("recovery is n/a without deviations and 0 without recoveries") {
  const Action a = make::click("a"), b = make::click("b"), c = make::click("c");
  const Action d = make::click("d");

  CHECK_FALSE(recovery_rate(bundle_of({a, b}, {a, b}), kJudge).score.has_value());

  Recovery lost = recovery_rate(bundle_of({a, b}, {c}), kJudge);
  REQUIRE(lost.score.has_value());
  CHECK(*lost.score == Approx(0.0).margin(1e-9));
  CHECK(lost.incidents == 1);
  REQUIRE(lost.log.size() == 1);
  CHECK_FALSE(lost.log[0].recovered);

  // within the default window a forward jump is on-track, beyond it is not
  TrajectoryBundle jump = bundle_of({a, b, c, d}, {d});
  CHECK_FALSE(recovery_rate(jump, kJudge, 5).score.has_value());
  Recovery narrow = recovery_rate(jump, kJudge, 2);
  CHECK(narrow.incidents == 1);
  CHECK(narrow.recoveries == 0);

  CHECK_THROWS_AS(recovery_rate(jump, kJudge, 0), std::invalid_argument);
}

TEST_CASE("recovery walk agrees with the oracle state machine") {
  std::mt19937_64 rng(90210);
  const std::vector<Action> alphabet = {
      make::click(int64_t(11)), make::click(int64_t(12)),
      make::click(int64_t(13)), make::click(int64_t(14))};

  for (int round = 0; round < 400; ++round) {
    const int lookahead = 1 + int(rng() % 5);
    std::vector<uint8_t> gold(1 + rng() % 6), agent(rng() % 10);
    for (auto& s : gold) s = uint8_t(rng() % alphabet.size());
    for (auto& s : agent) s = uint8_t(rng() % alphabet.size());

    auto to_actions = [&](const std::vector<uint8_t>& syms) {
      std::vector<Action> out;
      for (uint8_t s : syms) out.push_back(alphabet[s]);
      return out;
    };
    Recovery got = recovery_rate(bundle_of(to_actions(gold), to_actions(agent)),
                                 kJudge, lookahead);
    oracle::RecoveryOracle want = oracle::recovery_walk(gold, agent, lookahead);
    REQUIRE(got.incidents == want.incidents);
    REQUIRE(got.recoveries == want.recoveries);
  }
}

TEST_CASE("repetitiveness counting modes differ exactly by run lengths") {
  const Action a = make::click("a"), b = make::click("b"), c = make::click("c");
  TrajectoryBundle paired = bundle_of({}, {a, a, b, b, c, c});

  Repetitiveness all = repetitiveness_rate(paired, kJudge);
  CHECK(all.repeated == 6);
  CHECK(*all.score == Approx(0.0).margin(1e-9));

  Repetitiveness successors =
      repetitiveness_rate(paired, kJudge, RepetitionMode::RunSuccessorsOnly);
  CHECK(successors.repeated == 3);
  CHECK(*successors.score == Approx(0.5).margin(1e-9));

  CHECK_FALSE(repetitiveness_rate(bundle_of({}, {}), kJudge).score.has_value());
  CHECK(*repetitiveness_rate(bundle_of({}, {a, b, a}), kJudge).score ==
        Approx(1.0).margin(1e-9));
}

TEST_CASE("repetitiveness agrees with the oracle in both modes") {
  std::mt19937_64 rng(5150);
  const std::vector<Action> alphabet = {make::click(int64_t(1)),
                                        make::click(int64_t(2))};
  for (int round = 0; round < 300; ++round) {
    std::vector<uint8_t> syms(1 + rng() % 12);
    for (auto& s : syms) s = uint8_t(rng() % alphabet.size());
    std::vector<Action> actions;
    for (uint8_t s : syms) actions.push_back(alphabet[s]);
    TrajectoryBundle b = bundle_of({}, actions);
    oracle::RepetitionOracle want = oracle::repetition_scan(syms);

    Repetitiveness all = repetitiveness_rate(b, kJudge);
    CHECK(all.repeated == want.all_members);
    CHECK(*all.score ==
          Approx(1.0 - double(want.all_members) / double(syms.size()))
              .margin(1e-9));

    Repetitiveness succ =
        repetitiveness_rate(b, kJudge, RepetitionMode::RunSuccessorsOnly);
    CHECK(succ.repeated == want.successors_only);

    CHECK(*all.score >= 0.0);
    CHECK(*all.score <= 1.0);
    CHECK(*succ.score >= *all.score);  // successors never count more
  }
}

namespace {

Step declared_step(int index, std::optional<Action> declared, Action executed) {
  Step s;
  s.index = index;
  s.declared_intent = std::move(declared);
  s.executed_action = std::move(executed);
  return s;
}

}  // namespace

TEST_CASE("element accuracy denominators: declared-only vs strict") {
  const Action a = make::click("a"), b = make::click("b");
  TrajectoryBundle bundle;
  bundle.actual.kind = TrajectoryKind::AgentActual;
  bundle.actual.steps = {
      declared_step(1, a, a),             // agreement
      declared_step(2, a, b),             // declared, missed
      declared_step(3, std::nullopt, b),  // silent
      declared_step(4, std::nullopt, a),  // silent
  };

  ElementAccuracy lax = element_accuracy_rate(bundle, kJudge, false);
  CHECK(lax.considered == 2);
  CHECK(lax.agreements == 1);
  CHECK(*lax.score == Approx(0.5).margin(1e-9));
  CHECK(lax.coverage == Approx(0.5).margin(1e-9));

  ElementAccuracy strict = element_accuracy_rate(bundle, kJudge, true);
  CHECK(strict.considered == 4);
  CHECK(*strict.score == Approx(0.25).margin(1e-9));
  CHECK(strict.coverage == Approx(0.5).margin(1e-9));

  SECTION("no declarations at all") {
    bundle.actual.steps = {declared_step(1, std::nullopt, a)};
    ElementAccuracy none = element_accuracy_rate(bundle, kJudge, false);
    CHECK_FALSE(none.score.has_value());
    CHECK(none.coverage == Approx(0.0).margin(1e-9));
    ElementAccuracy strict_none = element_accuracy_rate(bundle, kJudge, true);
    CHECK(*strict_none.score == Approx(0.0).margin(1e-9));
  }

  SECTION("a failed execution never agrees with its declaration") {
    bundle.actual.steps = {declared_step(1, a, make::none())};
    ElementAccuracy failed = element_accuracy_rate(bundle, kJudge, false);
    CHECK(failed.agreements == 0);
    CHECK(*failed.score == Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("partial success needs two requirements and an answer") {
  const TrajectoryBundle borders = border_states_fixture();
  PartialSuccess ps = partial_success_rate(borders, kJudge);
  REQUIRE(ps.score.has_value());
  CHECK(*ps.score == Approx(1.0 / 3.0).margin(1e-9));
  CHECK(ps.satisfied.at("Massachusetts"));
  CHECK_FALSE(ps.satisfied.at("Rhode Island"));

  SECTION("single-requirement tasks are out of scope") {
    TrajectoryBundle single = borders;
    single.task.requirements = {"Massachusetts"};
    CHECK_FALSE(partial_success_rate(single, kJudge).score.has_value());
  }

  SECTION("no final answer satisfies nothing") {
    TrajectoryBundle silent = borders;
    silent.actual.final_answer.reset();
    PartialSuccess none = partial_success_rate(silent, kJudge);
    REQUIRE(none.score.has_value());
    CHECK(*none.score == Approx(0.0).margin(1e-9));
    for (const auto& [_, ok] : none.satisfied) CHECK_FALSE(ok);
  }

  SECTION("full answers score 1") {
    TrajectoryBundle full = borders;
    full.actual.final_answer = "Rhode Island, Massachusetts and New York.";
    full.actual.steps.back().executed_action.payload = *full.actual.final_answer;
    CHECK(*partial_success_rate(full, kJudge).score ==
          Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("outcome classification applies limits in precedence order") {
  const Action a = make::click("a"), b = make::click("b");
  const Limits limits;  // 30 / 3 / 3

  SECTION("repeat limit beats everything else") {
    std::vector<Action> actions(4, a);  // run of 4 > 3
    for (int i = 0; i < 3; ++i) actions.push_back(make::none());
    while (actions.size() < 31) {
      actions.push_back(b);
      actions.push_back(make::click("c"));
    }
    OutcomeClass got = classify_outcome(bundle_of({}, actions), limits);
    CHECK(got == OutcomeClass{OutcomeKind::EarlyStop,
                              EarlyStopReason::RepeatLimit});
  }

  SECTION("repeat limit wins even over a terminal stop") {
    OutcomeClass got =
        classify_outcome(bundle_of({}, {a, a, a, a, make::stop("x")}), limits);
    CHECK(got == OutcomeClass{OutcomeKind::EarlyStop,
                              EarlyStopReason::RepeatLimit});
  }

  SECTION("invalid limit beats the step limit") {
    std::vector<Action> actions(3, make::none());
    while (actions.size() < 31) {
      actions.push_back(a);
      actions.push_back(b);
    }
    OutcomeClass got = classify_outcome(bundle_of({}, actions), limits);
    CHECK(got == OutcomeClass{OutcomeKind::EarlyStop,
                              EarlyStopReason::InvalidLimit});
  }

  SECTION("step limit fires only without a terminal stop") {
    std::vector<Action> actions;
    while (actions.size() < 30) {
      actions.push_back(a);
      actions.push_back(b);
    }
    CHECK(classify_outcome(bundle_of({}, actions), limits) ==
          OutcomeClass{OutcomeKind::EarlyStop, EarlyStopReason::StepLimit});

    actions.back() = make::stop("found it");
    CHECK(classify_outcome(bundle_of({}, actions), limits) ==
          OutcomeClass{OutcomeKind::ProducedAnswer, std::nullopt});
  }

  SECTION("stop rules and NA fallbacks") {
    CHECK(classify_outcome(bundle_of({}, {a, make::stop("blue")}), limits) ==
          OutcomeClass{OutcomeKind::ProducedAnswer, std::nullopt});
    CHECK(classify_outcome(bundle_of({}, {a, make::stop("N/A")}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
    CHECK(classify_outcome(bundle_of({}, {a, make::stop("n/a ")}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
    CHECK(classify_outcome(bundle_of({}, {a, b}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
    CHECK(classify_outcome(bundle_of({}, {}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
  }

  SECTION("failed steps break repeat runs") {
    CHECK(classify_outcome(bundle_of({}, {a, a, make::none(), a, a}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
  }

  SECTION("exactly max_repeat occurrences are still legitimate") {
    CHECK(classify_outcome(bundle_of({}, {a, a, a}), limits) ==
          OutcomeClass{OutcomeKind::NA, std::nullopt});
    CHECK(classify_outcome(bundle_of({}, {a, a, a, a}), limits) ==
          OutcomeClass{OutcomeKind::EarlyStop, EarlyStopReason::RepeatLimit});
  }

  SECTION("limits are validated") {
    Limits bad;
    bad.max_steps = 0;
    CHECK_THROWS_AS(classify_outcome(bundle_of({}, {a}), bad),
                    std::invalid_argument);
  }
}

TEST_CASE("aggregation matches the mean/sd oracle and tallies outcomes") {
  std::vector<TaskScores> per_task;
  auto add = [&](Domain d, std::optional<double> ssr, std::optional<double> psr,
                 OutcomeClass outcome, size_t gold_len, size_t agent_len,
                 bool has_gold) {
    TaskScores t;
    t.task_id = int64_t(per_task.size()) + 1;
    t.domain = d;
    t.step_success = ssr;
    t.partial_success = psr;
    t.repetitiveness = 1.0;
    t.outcome = outcome;
    t.gold_len = gold_len;
    t.agent_len = agent_len;
    t.has_gold = has_gold;
    return per_task.push_back(t);
  };

  add(Domain::Map, 1.0, 0.5, {OutcomeKind::ProducedAnswer, std::nullopt}, 3, 4,
      true);
  add(Domain::Map, 0.25, std::nullopt, {OutcomeKind::NA, std::nullopt}, 5, 2,
      true);
  add(Domain::Ecommerce, std::nullopt, 1.0,
      {OutcomeKind::EarlyStop, EarlyStopReason::RepeatLimit}, 0, 7, false);
  add(Domain::Ecommerce, 0.5, 0.0,
      {OutcomeKind::EarlyStop, EarlyStopReason::StepLimit}, 2, 30, true);

  MetricReport report = aggregate(per_task);

  REQUIRE(report.aggregates.size() == size_t(kMetricCount));
  const MetricAggregate& ssr = report.aggregates[0];
  CHECK(ssr.metric == "Step Success Rate");
  CHECK(ssr.applicable == 3);
  CHECK(ssr.not_applicable == 1);
  oracle::MeanSd want_ssr = oracle::mean_sd({1.0, 0.25, 0.5});
  CHECK(ssr.mean == Approx(want_ssr.mean).margin(1e-12));
  CHECK(ssr.sd == Approx(want_ssr.sd).margin(1e-12));

  const MetricAggregate& psr = report.aggregates[4];
  CHECK(psr.metric == "Partial Success Rate");
  oracle::MeanSd want_psr = oracle::mean_sd({0.5, 1.0, 0.0});
  CHECK(psr.mean == Approx(want_psr.mean).margin(1e-12));
  CHECK(psr.sd == Approx(want_psr.sd).margin(1e-12));

  const MetricAggregate& recovery = report.aggregates[1];
  CHECK(recovery.applicable == 0);
  CHECK(recovery.not_applicable == 4);
  CHECK(recovery.mean == 0.0);

  REQUIRE(report.domains.size() == 2);  // Map and E-commerce rows only
  CHECK(report.domains[0].domain == Domain::Map);
  CHECK(report.domains[0].tasks == 2);
  CHECK(report.domains[0].answered_rate == Approx(0.5).margin(1e-12));
  CHECK(*report.domains[0].metric_means[0] ==
        Approx((1.0 + 0.25) / 2).margin(1e-12));
  CHECK(report.domains[1].domain == Domain::Ecommerce);
  CHECK(report.domains[1].answered_rate == Approx(0.0).margin(1e-12));

  oracle::MeanSd want_gold = oracle::mean_sd({3, 5, 2});
  oracle::MeanSd want_agent = oracle::mean_sd({4, 2, 7, 30});
  CHECK(report.steps.gold_tasks == 3);
  CHECK(report.steps.gold_mean == Approx(want_gold.mean).margin(1e-12));
  CHECK(report.steps.gold_sd == Approx(want_gold.sd).margin(1e-12));
  CHECK(report.steps.agent_tasks == 4);
  CHECK(report.steps.agent_mean == Approx(want_agent.mean).margin(1e-12));
  CHECK(report.steps.agent_sd == Approx(want_agent.sd).margin(1e-12));

  CHECK(report.outcomes.na == 1);
  CHECK(report.outcomes.produced_answer == 1);
  CHECK(report.outcomes.early_stop == 2);
  CHECK(report.outcomes.repeat_limit == 1);
  CHECK(report.outcomes.invalid_limit == 0);
  CHECK(report.outcomes.step_limit == 1);
  CHECK(report.outcomes.sum == 4);
  CHECK(report.outcomes.legitimate_rate == Approx(0.5).margin(1e-12));
}

TEST_CASE("aggregating an empty corpus stays well-defined") {
  MetricReport report = aggregate({});
  REQUIRE(report.aggregates.size() == size_t(kMetricCount));
  for (const MetricAggregate& a : report.aggregates) {
    CHECK(a.applicable == 0);
    CHECK(a.mean == 0.0);
    CHECK(a.sd == 0.0);
  }
  CHECK(report.domains.empty());
  CHECK(report.outcomes.sum == 0);
  CHECK(report.outcomes.legitimate_rate == 0.0);
}
