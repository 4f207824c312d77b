#include <gtest/gtest.h>

#include "rxm/error.hpp"
#include "testing.hpp"

namespace rxm {
namespace {

using testing::event;
using testing::names;

ErrorKind error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::invalid_argument;
}

Coordinator started(const ModelBundle& bundle, CoordinatorOptions options = {}) {
  Coordinator c = build_coordinator(bundle, options);
  c.start();
  return c;
}

TEST(Coordinator, DelayedEventInjectionsInTwoSuperSteps) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = started(bundle);
  auto first = c.inject(event(std::nullopt, "a", "E1"));
  EXPECT_EQ(names(first), (std::vector<std::string>{"E1", "E2", "E3"}));
  EXPECT_TRUE(first.back().quiescent);
  EXPECT_FALSE(first.front().quiescent);
  auto second = c.inject(event(std::nullopt, "c", "E5"));
  EXPECT_EQ(names(second), (std::vector<std::string>{"E5", "E6", "E4"}));
  EXPECT_EQ(second[1].event.origin, Origin::lsc("LSC2", 3));
  EXPECT_EQ(second[2].event.origin, Origin::lsc("LSC1", 1));
  EXPECT_EQ(c.violation_count(), 0u);
}

TEST(Coordinator, TraceLineFormat) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = started(bundle);
  auto trace = c.inject(event(std::nullopt, "a", "E1"));
  EXPECT_EQ(trace_line(trace[0]),
            R"({"seq":1,"clock":0,"origin":"env","src":"env","dst":"a","event":"E1","args":[],"violations":[],"quiescent":false})");
  EXPECT_EQ(trace_line(trace[2]),
            R"({"seq":3,"clock":0,"origin":"lsc:LSC1#1","src":"c","dst":"d","event":"E3","args":[],"violations":[],"quiescent":true})");
}

TEST(Coordinator, PureScenarioModelRuns) {
  auto bundle = testing::load_fixture({"switch_light/stage1.rxm"});
  Coordinator c = build_coordinator(bundle);
  EXPECT_TRUE(c.machines().empty());
  EXPECT_EQ(c.playout().specs().size(), 1u);
  c.start();
  c.inject(event(std::nullopt, "switch1", "click"));
  EXPECT_EQ(c.store().get(ObjectRef{"light1"}, "state"), Value("on"));
}

TEST(Coordinator, RejectsBadInjectionsWithoutTracing) {
  auto bundle = testing::load_fixture({"switch_light/stage4.rxm"});
  Coordinator c = started(bundle);
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "switch1", "explode")); }), ErrorKind::unknown_event);
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "ghost", "click")); }), ErrorKind::unknown_object);
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "switch1", "click", {Value(1)})); }),
            ErrorKind::arity_mismatch);
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "light1", "setState", {Value(3)})); }),
            ErrorKind::kind_mismatch);
  EXPECT_EQ(c.snapshot()["seq"], 0);
  EXPECT_EQ(names(c.inject(event(std::nullopt, "switch1", "click")))[0], "click");
}

TEST(Coordinator, RegistrationErrors) {
  auto bundle = testing::load_fixture({"switch_light/stage2.rxm"});
  Coordinator c(build_store(bundle));
  auto spec = std::make_shared<const StatechartSpec>(bundle.statecharts[0]);
  EXPECT_EQ(error_of([&] { c.register_machine(spec, "nobody"); }), ErrorKind::unknown_object);
  c.register_machine(spec, "switch1");
  EXPECT_EQ(error_of([&] { c.register_machine(spec, "switch1"); }), ErrorKind::duplicate_registration);
  auto chart = std::make_shared<const ChartSpec>(bundle.charts[0]);
  c.register_chart(chart);
  EXPECT_EQ(error_of([&] { c.register_chart(chart); }), ErrorKind::duplicate_registration);
  c.start();
  EXPECT_EQ(error_of([&] { c.start(); }), ErrorKind::already_initialized);
  EXPECT_EQ(error_of([&] { c.register_chart(chart); }), ErrorKind::already_initialized);
}

TEST(Coordinator, NotStartedRejectsSteps) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = build_coordinator(bundle);
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "a", "E1")); }), ErrorKind::not_initialized);
}

TEST(Coordinator, StatechartEventsPrecedeScenarioCandidates) {
  auto bundle = testing::load_fixture({"priority.rxm"});
  Coordinator c = started(bundle);
  auto trace = c.inject(event(std::nullopt, "s1", "ping"));
  EXPECT_EQ(names(trace), (std::vector<std::string>{"ping", "report", "note", "alarm"}));
  EXPECT_EQ(trace[1].event.origin.kind, Origin::Kind::statechart);
  EXPECT_EQ(trace[3].event.origin.kind, Origin::Kind::lsc);
  EXPECT_EQ(trace[3].queue_depth, 0u);
  EXPECT_EQ(trace[1].queue_depth, 2u);
}

TEST(Coordinator, UnconsumedEventsAreStillTraced) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = started(bundle);
  auto trace = c.inject(event(std::nullopt, "b", "E3"));
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_FALSE(trace[0].consumed);
  EXPECT_TRUE(trace[0].quiescent);
  EXPECT_TRUE(c.inject(event(std::nullopt, "a", "E1"))[0].consumed);
}

TEST(Coordinator, ForbiddenStatechartEventIsReportedOnItsEntry) {
  auto bundle = testing::load_fixture({"forbidden_statechart.rxm"});
  Coordinator c = started(bundle);
  auto trace = c.inject(event(std::nullopt, "d1", "go"));
  ASSERT_EQ(names(trace), (std::vector<std::string>{"go", "bad"}));
  ASSERT_EQ(trace[1].violations.size(), 1u);
  EXPECT_EQ(trace[1].violations[0].kind, ViolationKind::forbidden);
  EXPECT_EQ(trace[1].violations[0].chart, "Guard");
}

TEST(Coordinator, ForbiddenScenarioEventWaits) {
  auto bundle = testing::load_fixture({"forbidden_scenario.rxm"});
  Coordinator c = started(bundle);
  EXPECT_EQ(names(c.inject(event(std::nullopt, "d1", "go"))), std::vector<std::string>{"go"});
  auto trace = c.inject(event(std::nullopt, "t1", "release"));
  EXPECT_EQ(names(trace), (std::vector<std::string>{"release", "bad"}));
  EXPECT_TRUE(trace[1].violations.empty());
}

TEST(Coordinator, TickWithoutDueTimersOnlyMovesTheClock) {
  auto bundle = testing::load_fixture({"railcar/model.rxm", "railcar/platform_manager.rxm"});
  Coordinator c = started(bundle);
  // Only the busy-wait state arms a timer, and it is not active yet.
  EXPECT_TRUE(c.tick(500).empty());
  EXPECT_EQ(c.clock(), 500);
  EXPECT_EQ(error_of([&] { c.tick(-1); }), ErrorKind::invalid_argument);
  EXPECT_EQ(c.clock(), 500);
}

TEST(Coordinator, TimersFireAtTheirDueTime) {
  auto bundle = testing::model(R"(
class Beacon {
  property count: int = 0
  signal arm/0
}
object b1 : Beacon
statechart BeaconBehavior for Beacon {
  initial state Off { on arm -> On }
  state On { every 1s / count := count + 1 }
}
)");
  Coordinator c = started(bundle);
  c.tick(300);
  c.inject(event(std::nullopt, "b1", "arm"));
  auto trace = c.tick(2500);
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_EQ(trace[0].clock, 1300);
  EXPECT_EQ(trace[1].clock, 2300);
  EXPECT_EQ(trace[0].event.origin, Origin::timer("b1"));
  EXPECT_EQ(trace[0].event.name, "every(1000)");
  EXPECT_EQ(c.clock(), 2800);
  EXPECT_EQ(c.store().get(ObjectRef{"b1"}, "count"), Value(2));
}

TEST(Coordinator, RunScriptRecordsAssertions) {
  auto bundle = testing::load_fixture({"switch_light/stage4.rxm"});
  Coordinator c = started(bundle);
  auto steps = testing::script(R"(
inject env switch1.click
assert light1.state == "on"
assert light1.state == "off"
assert switch1 in On
tick 1s
assert clock == 1000
assert violations == 0
)", bundle);
  RunReport r = c.run_script(steps);
  ASSERT_EQ(r.asserts.size(), 5u);
  EXPECT_TRUE(r.asserts[0].passed);
  EXPECT_FALSE(r.asserts[1].passed);
  EXPECT_EQ(r.asserts[1].step, "assert light1.state == \"off\"");
  EXPECT_TRUE(r.asserts[2].passed);
  EXPECT_TRUE(r.asserts[3].passed);
  EXPECT_TRUE(r.asserts[4].passed);
  EXPECT_FALSE(r.assertions_passed());
}

TEST(Coordinator, EmptyScriptEmptyTrace) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = started(bundle);
  RunReport r = c.run_script({});
  EXPECT_TRUE(r.trace.empty());
  EXPECT_TRUE(r.assertions_passed());
}

TEST(Coordinator, StepBoundIsReportedAndTheRunContinues) {
  auto bundle = testing::model(R"(
class Echo {
  property peer: ref Echo = null
  signal hit/0
  signal stop/0
}
object e1 : Echo {
  peer = e2
}
object e2 : Echo {
  peer = e1
}
statechart EchoBehavior for Echo {
  initial state Live {
    on hit / send peer.hit
    on stop -> Done
  }
  state Done
}
)");
  CoordinatorOptions options;
  options.step_bound = 20;
  Coordinator c = started(bundle, options);
  auto trace = c.inject(event(std::nullopt, "e1", "hit"));
  EXPECT_EQ(trace.size(), 20u);
  ASSERT_EQ(c.errors().size(), 1u);
  EXPECT_NE(c.errors()[0].find("step bound"), std::string::npos);
  EXPECT_TRUE(c.queue().empty());
  EXPECT_FALSE(c.halted());
  EXPECT_EQ(c.inject(event(std::nullopt, "e1", "stop")).size(), 1u);
}

TEST(Coordinator, StrictModeHaltsOnHotViolation) {
  auto bundle = testing::load_fixture({"forbidden_statechart.rxm"});
  CoordinatorOptions options;
  options.strict = true;
  Coordinator c = started(bundle, options);
  c.inject(event(std::nullopt, "d1", "go"));
  EXPECT_TRUE(c.halted());
  EXPECT_EQ(error_of([&] { c.inject(event(std::nullopt, "t1", "release")); }), ErrorKind::halted);
}

TEST(Coordinator, FreshSnapshot) {
  auto bundle = testing::load_fixture({"railcar/model.rxm", "railcar/platform_manager.rxm"});
  Coordinator c = started(bundle);
  Json s = c.snapshot();
  EXPECT_EQ(s["clock"], 0);
  EXPECT_TRUE(s["copies"].empty());
  ASSERT_EQ(s["machines"].size(), 3u);
  EXPECT_EQ(s["machines"][0]["id"], "pm1");
  EXPECT_EQ(s["machines"][0]["configuration"],
            Json::parse(R"(["main.Idle","entrance.linked","exitSegment.unlinked","board.dark"])"));
  EXPECT_EQ(s["machines"][2]["configuration"], Json::parse(R"(["cruising"])"));
}

// Hand simulation of the first super-step: E1 and the A/C sync take A to 2
// and C to 1; E2 and E3 add one each on A, B, C, D; the B/D sync then adds one
// to B and D. E4 is next on B and D.
TEST(Coordinator, SnapshotShowsCutAfterE1) {
  auto bundle = testing::load_fixture({"delayed.rxm"});
  Coordinator c = started(bundle);
  c.inject(event(std::nullopt, "a", "E1"));
  Json s = c.snapshot();
  ASSERT_EQ(s["copies"].size(), 2u);
  EXPECT_EQ(s["copies"][0]["chart"], "LSC1");
  EXPECT_EQ(s["copies"][0]["cut"], Json::parse(R"({"A":3,"B":2,"C":2,"D":2})"));
  EXPECT_EQ(s["copies"][0]["enabled"], Json::parse(R"(["B->D:E4"])"));
  EXPECT_EQ(s["copies"][1]["chart"], "LSC3");
  EXPECT_EQ(s["obligations"].size(), 1u);
}

TEST(Coordinator, RestoredSnapshotReplaysIdentically) {
  auto bundle = testing::load_fixture({"railcar/model.rxm", "railcar/allocation_lsc.rxm"});
  auto steps = testing::script_fixture("railcar/arrival.rxs", bundle);
  ASSERT_GE(steps.size(), 2u);
  for (std::size_t cut = 0; cut <= steps.size(); ++cut) {
    Script head(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(cut));
    Script tail(steps.begin() + static_cast<std::ptrdiff_t>(cut), steps.end());

    Coordinator straight = started(bundle);
    straight.run_script(head);
    Json saved = straight.snapshot();
    auto expected = testing::lines(straight.run_script(tail).trace);

    Coordinator restored = build_coordinator(bundle);
    restored.restore(saved);
    EXPECT_EQ(restored.snapshot(), saved);
    EXPECT_EQ(testing::lines(restored.run_script(tail).trace), expected) << "cut at " << cut;
    EXPECT_EQ(restored.snapshot(), straight.snapshot());
  }
}

TEST(Coordinator, RestoreRejectsForeignSnapshots) {
  auto delayed = testing::load_fixture({"delayed.rxm"});
  auto sl = testing::load_fixture({"switch_light/stage4.rxm"});
  Coordinator a = started(delayed);
  Coordinator b = build_coordinator(sl);
  EXPECT_THROW(b.restore(a.snapshot()), Error);
}

TEST(Coordinator, JsonValues) {
  EXPECT_EQ(to_json(Value(3)), Json(3));
  EXPECT_EQ(to_json(Value(ObjectRef{"t1"})), Json::parse(R"({"ref":"t1"})"));
  EXPECT_EQ(to_json(Value::null_ref()), Json(nullptr));
  for (const Value& v : {Value(3), Value("x"), Value(true), Value(ObjectRef{"t1"}), Value::null_ref()}) {
    EXPECT_EQ(value_from_json(to_json(v)), v);
  }
}

TEST(Coordinator, RunErrorUndoesTheFailingEvent) {
  auto bundle = testing::model(R"(
class Peer { signal ack/0 }
class Lamp {
  property state: string = "off"
  property owner: ref Peer = null
  signal toggle/0
}
object l1 : Lamp
statechart LampBehavior for Lamp {
  initial state Off {
    on toggle -> On / state := "on"; send owner.ack
  }
  state On
}
)");
  Coordinator c = build_coordinator(bundle);
  c.start();
  Json before = c.snapshot();
  auto trace = c.inject(testing::event(std::nullopt, "l1", "toggle"));
  EXPECT_TRUE(trace.empty());
  ASSERT_EQ(c.errors().size(), 1u);
  EXPECT_NE(c.errors()[0].find("null reference"), std::string::npos);
  // Neither the half-taken transition nor the property write survive.
  EXPECT_EQ(c.machine("l1")->configuration(), std::vector<std::string>{"Off"});
  EXPECT_EQ(c.store().get(ObjectRef{"l1"}, "state"), Value("off"));
  EXPECT_EQ(c.snapshot(), before);
}

}  // namespace
}  // namespace rxm
