#include <gtest/gtest.h>

#include "rxm/error.hpp"
#include "testing.hpp"

namespace rxm {
namespace {

using testing::event;

// A store plus one machine per object of each statechart's class.
struct World {
  ModelBundle bundle;
  ObjectStore store;
  std::vector<std::shared_ptr<const StatechartSpec>> specs;

  explicit World(std::string_view text) : bundle(testing::model(text)), store(build_store(bundle)) {
    for (const auto& sc : bundle.statecharts) specs.push_back(std::make_shared<const StatechartSpec>(sc));
  }

  Machine machine(const std::string& object, std::size_t spec = 0) {
    return Machine(specs.at(spec), ObjectRef{object}, store);
  }

  MachineContext ctx(std::int64_t now = 0) {
    MachineContext c;
    c.store = &store;
    c.now = now;
    return c;
  }
};

constexpr std::string_view kSwitch = R"(
class Switch {
  property state: string = "off"
  property controller: ref Controller = null
  signal click/0
}
class Controller {
  method toggle/0
}
object switch1 : Switch {
  controller = ctrl1
}
object ctrl1 : Controller

statechart SwitchBehavior for Switch {
  initial state Off {
    on click -> On / state := "on"; send controller.toggle
  }
  state On {
    on click -> Off / state := "off"; send controller.toggle
  }
}
)";

TEST(Machine, SwitchInitializesWithoutEmissions) {
  World w(kSwitch);
  Machine m = w.machine("switch1");
  EXPECT_TRUE(m.configuration().empty());
  EXPECT_FALSE(m.initialized());
  auto ctx = w.ctx();
  StepResult r = m.initialize(ctx);
  EXPECT_EQ(r.configuration, std::vector<std::string>{"Off"});
  EXPECT_TRUE(r.emitted.empty());
  EXPECT_TRUE(m.configuration_valid());
}

TEST(Machine, ClickTogglesAndCallsController) {
  World w(kSwitch);
  Machine m = w.machine("switch1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  StepResult r = m.dispatch(event(std::nullopt, "switch1", "click"), ctx);
  EXPECT_TRUE(r.consumed);
  EXPECT_EQ(r.configuration, std::vector<std::string>{"On"});
  ASSERT_EQ(r.emitted.size(), 1u);
  EXPECT_EQ(r.emitted[0].target.id, "ctrl1");
  EXPECT_EQ(r.emitted[0].name, "toggle");
  EXPECT_EQ(r.emitted[0].source_id(), "switch1");
  EXPECT_EQ(r.emitted[0].origin, Origin::statechart("switch1"));
  EXPECT_EQ(w.store.get(ObjectRef{"switch1"}, "state"), Value("on"));
}

TEST(Machine, UnmatchedEventChangesNothing) {
  World w(kSwitch);
  Machine m = w.machine("switch1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  MachineState before = m.state();
  StepResult r = m.dispatch(event(std::nullopt, "switch1", "setState", {Value("on")}), ctx);
  EXPECT_FALSE(r.consumed);
  EXPECT_TRUE(r.emitted.empty());
  EXPECT_EQ(r.configuration, std::vector<std::string>{"Off"});
  EXPECT_EQ(m.state(), before);
}

TEST(Machine, LifecycleErrors) {
  World w(kSwitch);
  EXPECT_THROW(w.machine("ctrl1"), Error);
  try {
    w.machine("ctrl1");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::class_mismatch);
  }
  Machine m = w.machine("switch1");
  auto ctx = w.ctx();
  try {
    m.dispatch(event(std::nullopt, "switch1", "click"), ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_initialized);
  }
  m.initialize(ctx);
  try {
    m.initialize(ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::already_initialized);
  }
  try {
    (void)m.is_active("dimmed");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_state);
  }
}

constexpr std::string_view kManager = R"(
class Manager {
  signal connectSegment/3
  signal done/0
  signal occupy/1
  signal free/1
}
object pm1 : Manager

statechart ManagerBehavior for Manager {
  var carID: int = 0
  var segType: string = ""
  var dir: int = 0
  region {
    state main {
      initial state Idle {
        on connectSegment(a1, a2, a3) -> connectingSegment / carID := a1; segType := a2; dir := a3
      }
      state connectingSegment {
        on done -> Idle
      }
    }
  }
  region {
    state Platform_1 {
      initial state Free {
        on occupy(p) [p == 1] -> Platform_1.Busy
      }
      state Busy {
        on free(p) [p == 1] -> Platform_1.Free
      }
    }
  }
  region {
    state Platform_2 {
      initial state Free {
        on occupy(p) [p == 2] -> Platform_2.Busy
      }
      state Busy {
        on free(p) [p == 2] -> Platform_2.Free
      }
    }
  }
  region {
    state Entrance_1 {
      initial state Free
      state Busy
    }
  }
}
)";

TEST(Machine, OrthogonalRegionsEnterTheirInitialStates) {
  World w(kManager);
  Machine m = w.machine("pm1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  // Each top-level region enters its initial chain: one wrapper state and its
  // initial child.
  EXPECT_EQ(m.configuration(), (std::vector<std::string>{"main.Idle", "Platform_1.Free",
                                                         "Platform_2.Free", "Entrance_1.Free"}));
  EXPECT_TRUE(m.is_active("Platform_1.Free"));
  EXPECT_FALSE(m.is_active("Platform_1.Busy"));
  EXPECT_TRUE(m.configuration_valid());
}

TEST(Machine, EventArgumentsAreStored) {
  World w(kManager);
  Machine m = w.machine("pm1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  StepResult r = m.dispatch(event(std::nullopt, "pm1", "connectSegment", {Value(5), Value("entry"), Value(1)}), ctx);
  EXPECT_TRUE(r.consumed);
  EXPECT_EQ(m.variables().at("carID"), Value(5));
  EXPECT_EQ(m.variables().at("segType"), Value("entry"));
  EXPECT_EQ(m.variables().at("dir"), Value(1));
  EXPECT_TRUE(m.is_active("main.connectingSegment"));
}

TEST(Machine, RegionsReactIndependently) {
  World w(kManager);
  Machine m = w.machine("pm1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "pm1", "occupy", {Value(2)}), ctx);
  EXPECT_TRUE(m.is_active("Platform_1.Free"));
  EXPECT_TRUE(m.is_active("Platform_2.Busy"));
  m.dispatch(event(std::nullopt, "pm1", "occupy", {Value(1)}), ctx);
  EXPECT_TRUE(m.is_active("Platform_1.Busy"));
  EXPECT_TRUE(m.configuration_valid());
}

constexpr std::string_view kOrder = R"(
class Probe {
  property log: string = ""
  signal go/0
  signal back/0
  signal inner/0
  signal ping/0
}
object p1 : Probe

statechart ProbeBehavior for Probe {
  event step/0
  event step2/0
  initial state A {
    entry / log := log + "eA "
    exit / log := log + "xA "
    on go -> B.B2 / log := log + "t "
    on ping / log := log + "ping "; raise step
    on step / log := log + "step "; raise step2
    on step2 / log := log + "step2 "
    initial state A1 {
      entry / log := log + "eA1 "
      exit / log := log + "xA1 "
      on inner -> A2
    }
    state A2 {
      entry / log := log + "eA2 "
    }
  }
  state B {
    entry / log := log + "eB "
    on back -> A
    region {
      initial state B1 {
        entry / log := log + "eB1 "
      }
      state B2 {
        entry / log := log + "eB2 "
        exit / log := log + "xB2 "
      }
    }
    region {
      initial state C1 {
        entry / log := log + "eC1 "
        exit / log := log + "xC1 "
      }
    }
  }
}
)";

TEST(Machine, ExitAndEntryOrderFollowHierarchy) {
  World w(kOrder);
  Machine m = w.machine("p1");
  auto ctx = w.ctx();
  auto log = [&] { return w.store.get(ObjectRef{"p1"}, "log").as_string(); };
  auto clear = [&] { w.store.set(ObjectRef{"p1"}, "log", Value("")); };

  m.initialize(ctx);
  EXPECT_EQ(log(), "eA eA1 ");
  clear();
  m.dispatch(event(std::nullopt, "p1", "go"), ctx);
  // Innermost first on exit; the explicit target overrides its region's
  // initial state while the sibling region enters by default.
  EXPECT_EQ(log(), "xA1 xA t eB eB2 eC1 ");
  EXPECT_EQ(m.configuration(), (std::vector<std::string>{"B.B2", "B.C1"}));
  clear();
  m.dispatch(event(std::nullopt, "p1", "back"), ctx);
  EXPECT_EQ(log(), "xB2 xC1 eA eA1 ");
  EXPECT_TRUE(m.configuration_valid());
}

TEST(Machine, InnermostTransitionWins) {
  World w(kOrder);
  Machine m = w.machine("p1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "p1", "inner"), ctx);
  EXPECT_EQ(m.configuration(), std::vector<std::string>{"A.A2"});
}

TEST(Machine, RaisedEventsRunToCompletionBeforeReturning) {
  World w(kOrder);
  Machine m = w.machine("p1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  w.store.set(ObjectRef{"p1"}, "log", Value(""));
  StepResult r = m.dispatch(event(std::nullopt, "p1", "ping"), ctx);
  EXPECT_EQ(w.store.get(ObjectRef{"p1"}, "log"), Value("ping step step2 "));
  EXPECT_TRUE(r.emitted.empty());
}

TEST(Machine, MicrostepLimitStopsRaiseCycles) {
  World w(R"(
class Loop { signal go/0 }
object l1 : Loop
statechart LoopBehavior for Loop {
  event again/0
  initial state S {
    on go / raise again
    on again / raise again
  }
}
)");
  Machine m = w.machine("l1");
  m.set_max_microsteps(50);
  auto ctx = w.ctx();
  m.initialize(ctx);
  try {
    m.dispatch(event(std::nullopt, "l1", "go"), ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::run_error);
  }
}

TEST(Machine, ChoicePicksFirstTrueBranchThenElse) {
  World w(R"(
class Gate {
  property n: int = 0
  signal probe/1
}
object g1 : Gate
statechart GateBehavior for Gate {
  initial state Idle {
    on probe(x) -> decide / n := x
  }
  choice decide {
    [n > 5] -> High
    [n > 2] -> Mid
    else -> Low
  }
  state High { on probe(x) -> Idle }
  state Mid { on probe(x) -> Idle }
  state Low { on probe(x) -> Idle }
}
)");
  Machine m = w.machine("g1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  const std::pair<int, const char*> cases[] = {{9, "High"}, {3, "Mid"}, {1, "Low"}, {6, "High"}};
  for (const auto& [arg, expected] : cases) {
    m.dispatch(event(std::nullopt, "g1", "probe", {Value(arg)}), ctx);
    EXPECT_EQ(m.configuration(), std::vector<std::string>{expected}) << arg;
    EXPECT_TRUE(m.configuration_valid());
    m.dispatch(event(std::nullopt, "g1", "probe", {Value(0)}), ctx);
  }
}

TEST(Machine, GuardsSeeOtherMachines) {
  World w(R"(
class Lamp { signal flip/0 }
class Watcher {
  property seen: int = 0
  signal look/0
}
object lamp1 : Lamp
object w1 : Watcher
statechart LampBehavior for Lamp {
  initial state dark { on flip -> lit }
  state lit { on flip -> dark }
}
statechart WatcherBehavior for Watcher {
  initial state S {
    on look [active(lamp1::lit)] / seen := seen + 1
  }
}
)");
  Machine lamp = w.machine("lamp1", 0);
  Machine watcher = w.machine("w1", 1);
  auto ctx = w.ctx();
  ctx.remote_active = [&](std::string_view obj, const std::vector<std::string>& path) {
    EXPECT_EQ(obj, "lamp1");
    return lamp.is_active(path.at(0));
  };
  lamp.initialize(ctx);
  watcher.initialize(ctx);
  watcher.dispatch(event(std::nullopt, "w1", "look"), ctx);
  lamp.dispatch(event(std::nullopt, "lamp1", "flip"), ctx);
  watcher.dispatch(event(std::nullopt, "w1", "look"), ctx);
  EXPECT_EQ(w.store.get(ObjectRef{"w1"}, "seen"), Value(1));
}

constexpr std::string_view kTimers = R"(
class Clocked {
  property ticks: int = 0
  signal arrive/0
  signal leave/0
}
object c1 : Clocked
statechart ClockedBehavior for Clocked {
  initial state Idle {
    every 1000ms / ticks := ticks + 1
    on arrive -> AtTerminal
  }
  state AtTerminal {
    after 90s -> Departing
    on leave -> Idle
  }
  state Departing
}
)";

// Firing times of a periodic timer armed at `armed`, found by stepping through
// every millisecond up to `now`.
std::vector<std::int64_t> periodic_firings(std::int64_t armed, std::int64_t period, std::int64_t now) {
  std::vector<std::int64_t> out;
  for (std::int64_t t = armed + 1; t <= now; ++t) {
    if ((t - armed) % period == 0) out.push_back(t);
  }
  return out;
}

TEST(Machine, PeriodicTimerCatchesUpWithoutIntermediatePolls) {
  for (std::int64_t now : {999, 1000, 3500, 4000, 7321}) {
    World w(kTimers);
    Machine m = w.machine("c1");
    auto ctx = w.ctx(0);
    m.initialize(ctx);
    auto due = m.due_timers(now);
    auto expected = periodic_firings(0, 1000, now);
    ASSERT_EQ(due.size(), expected.size()) << now;
    for (const auto& e : due) {
      EXPECT_EQ(e.name, "every(1000)");
      EXPECT_EQ(e.origin, Origin::timer("c1"));
      EXPECT_TRUE(e.timer.has_value());
    }
    EXPECT_EQ(m.next_due(), expected.empty() ? 1000 : expected.back() + 1000);
  }
}

TEST(Machine, PeriodicTimerFiresOnceAtItsPeriod) {
  World w(kTimers);
  Machine m = w.machine("c1");
  auto ctx = w.ctx(0);
  m.initialize(ctx);
  EXPECT_TRUE(m.due_timers(999).empty());
  auto due = m.due_timers(1000);
  ASSERT_EQ(due.size(), 1u);
  auto fire_ctx = w.ctx(1000);
  EXPECT_TRUE(m.dispatch(due[0], fire_ctx).consumed);
  EXPECT_EQ(w.store.get(ObjectRef{"c1"}, "ticks"), Value(1));
}

TEST(Machine, OneShotTimerCountsFromEntry) {
  World w(kTimers);
  Machine m = w.machine("c1");
  auto ctx = w.ctx(0);
  m.initialize(ctx);
  auto arrive_ctx = w.ctx(10);
  m.dispatch(event(std::nullopt, "c1", "arrive"), arrive_ctx);
  EXPECT_TRUE(m.due_timers(90009).empty());
  auto due = m.due_timers(90010);
  ASSERT_EQ(due.size(), 1u);
  EXPECT_EQ(due[0].name, "after(90000)");
  auto fire_ctx = w.ctx(90010);
  m.dispatch(due[0], fire_ctx);
  EXPECT_EQ(m.configuration(), std::vector<std::string>{"Departing"});
  EXPECT_TRUE(m.due_timers(200000).empty());
}

TEST(Machine, ExitingAStateDisarmsItsTimers) {
  World w(kTimers);
  Machine m = w.machine("c1");
  auto ctx = w.ctx(0);
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "c1", "arrive"), ctx);
  m.dispatch(event(std::nullopt, "c1", "leave"), ctx);
  for (const auto& e : m.due_timers(95000)) EXPECT_NE(e.name, "after(90000)");
}

TEST(Machine, StaleTimerEventsAreIgnored) {
  World w(kTimers);
  Machine m = w.machine("c1");
  auto ctx = w.ctx(0);
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "c1", "arrive"), ctx);
  auto due = m.due_timers(90000);
  ASSERT_EQ(due.size(), 1u);
  // Leave and re-enter before the firing is delivered: the old firing belongs
  // to a previous activation.
  m.dispatch(event(std::nullopt, "c1", "leave"), ctx);
  m.dispatch(event(std::nullopt, "c1", "arrive"), ctx);
  EXPECT_FALSE(m.dispatch(due[0], ctx).consumed);
  EXPECT_EQ(m.configuration(), std::vector<std::string>{"AtTerminal"});
}

TEST(Machine, RestoreRoundTrips) {
  World w(kOrder);
  Machine m = w.machine("p1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "p1", "go"), ctx);
  MachineState saved = m.state();
  m.dispatch(event(std::nullopt, "p1", "back"), ctx);
  m.restore(saved);
  EXPECT_EQ(m.configuration(), (std::vector<std::string>{"B.B2", "B.C1"}));
  MachineState bad = saved;
  bad.active.pop_back();
  EXPECT_THROW(m.restore(bad), Error);
}

std::vector<std::string> problems(std::string_view text) {
  auto r = parse_model(text);
  std::vector<std::string> out;
  for (const auto& e : r.errors) out.push_back(e.message);
  return out;
}

bool mentions(const std::vector<std::string>& msgs, std::string_view needle) {
  for (const auto& m : msgs) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(StatechartValidation, RejectsBadSpecs) {
  constexpr std::string_view head = "class K {\n  property n: int = 0\n  signal a/0\n  signal b/1\n}\nobject k1 : K\n";
  auto check = [&](std::string_view body, std::string_view needle) {
    auto msgs = problems(std::string(head) + "statechart KB for K {\n" + std::string(body) + "}\n");
    EXPECT_TRUE(mentions(msgs, needle)) << body << "\n got: " << (msgs.empty() ? "" : msgs[0]);
  };
  check("initial state S { on zap -> S }\n", "trigger 'zap'");
  check("initial state S { on b -> S }\n", "binds");
  check("initial state S { on a [n + 1] -> S }\n", "guard is not boolean");
  check("initial state S { on a / m := 1 }\n", "unknown variable or property 'm'");
  check("initial state S { on a / send k1.zap }\n", "does not declare event 'zap'");
  check("initial state S { on a -> C }\nchoice C {\n [n > 1] -> S\n else -> S\n else -> S\n}\n",
        "more than one else");
  check("initial final F\nstate S\n", "final state cannot be initial");
  check("initial state S { on a -> Nowhere }\n", "undeclared or ambiguous state 'Nowhere'");
  check("initial state S { every 0ms -> S }\n", "positive period");
  check("region { initial state X { on a -> Y } }\nregion { initial state Y }\n",
        "crosses top-level regions");
}

// Between sibling regions of a nested state the transition leaves and
// re-enters the orthogonal owner.
TEST(Machine, TransitionBetweenNestedRegionsReentersOwner) {
  World w(R"(
class K {
  property log: string = ""
  signal a/0
  signal b/0
}
object k1 : K
statechart KB for K {
  initial state S {
    entry / log := log + "eS "
    exit / log := log + "xS "
    region {
      initial state X { on a -> Y }
      state X2
    }
    region {
      initial state W
      state Y { on b -> X2 }
    }
  }
}
)");
  Machine m = w.machine("k1");
  auto ctx = w.ctx();
  m.initialize(ctx);
  m.dispatch(event(std::nullopt, "k1", "a"), ctx);
  EXPECT_EQ(m.configuration(), (std::vector<std::string>{"S.X", "S.Y"}));
  m.dispatch(event(std::nullopt, "k1", "b"), ctx);
  EXPECT_EQ(m.configuration(), (std::vector<std::string>{"S.X2", "S.W"}));
  EXPECT_EQ(w.store.get(ObjectRef{"k1"}, "log"), Value("eS xS eS xS eS "));
  EXPECT_TRUE(m.configuration_valid());
}

}  // namespace
}  // namespace rxm
