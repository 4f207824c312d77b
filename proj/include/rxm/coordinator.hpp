#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxm/event.hpp"
#include "rxm/lsc.hpp"
#include "rxm/object_model.hpp"
#include "rxm/playout.hpp"
#include "rxm/script.hpp"
#include "rxm/statechart.hpp"

namespace rxm {

using Json = nlohmann::ordered_json;

struct TraceEntry {
  std::int64_t seq = 0;
  std::int64_t clock = 0;
  EventInstance event;
  std::vector<Violation> violations;
  bool quiescent = false;
  std::size_t queue_depth = 0;  // statechart queue length when the event was selected
  bool consumed = false;        // some machine or chart reacted
};

/// One trace record, keys in fixed order; dumps to the golden line format.
Json to_json(const TraceEntry& entry);
std::string trace_line(const TraceEntry& entry);

/// ints, bools and strings map directly; refs become {"ref":"id"}, null refs null.
Json to_json(const Value& value);
Value value_from_json(const Json& j);

struct CoordinatorOptions {
  std::int64_t step_bound = 10000;
  bool strict = false;  // halt on hot or forbidden violations
};

struct AssertOutcome {
  std::string step;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::vector<TraceEntry> trace;
  std::vector<AssertOutcome> asserts;
  std::vector<std::string> errors;

  bool assertions_passed() const;
  std::size_t violation_count() const;
};

/// Sole owner of the run: object store, machines, chart copies, logical clock
/// and the statechart event queue.
class Coordinator {
 public:
  explicit Coordinator(ObjectStore store, CoordinatorOptions options = {});

  /// Instantiates the spec for one object. Only before start().
  void register_machine(std::shared_ptr<const StatechartSpec> spec, const std::string& object);
  void register_chart(std::shared_ptr<const ChartSpec> spec);

  /// Initializes all machines; events sent by entry actions run as a super-step.
  std::vector<TraceEntry> start();
  bool started() const { return started_; }

  /// Runs one full super-step for an environment event. Throws on unknown
  /// target, undeclared event, or wrong arity; nothing is traced then.
  std::vector<TraceEntry> inject(EventInstance event);
  std::vector<TraceEntry> tick(std::int64_t delta_ms);

  /// Executes a script from the current state; assertion failures are recorded.
  RunReport run_script(const Script& script);

  /// Checks one event without delivering it (target, name, arity, setter kind).
  void check_injectable(const EventInstance& event) const;

  std::int64_t clock() const { return clock_; }
  bool halted() const { return halted_; }
  const std::vector<std::string>& errors() const { return errors_; }
  std::size_t violation_count() const { return violation_count_; }
  const CoordinatorOptions& options() const { return options_; }

  const ObjectStore& store() const { return world_.store; }
  const std::vector<Machine>& machines() const { return world_.machines; }
  const Machine* machine(std::string_view object) const;
  const Playout& playout() const { return world_.playout; }

  /// The statechart queue is empty outside super-steps; exposed for tests.
  const std::deque<EventInstance>& queue() const { return world_.queue; }

  /// LSC candidates that survive the delivery preview, in selection order.
  std::vector<EventInstance> lsc_candidates();

  Json snapshot() const;
  /// Restores a snapshot taken from a coordinator with the same registrations.
  void restore(const Json& snapshot);

 private:
  struct World {
    ObjectStore store;
    std::vector<Machine> machines;
    std::map<std::string, std::size_t, std::less<>> machine_index;
    Playout playout;
    std::deque<EventInstance> queue;
  };

  static ChartContext chart_context(const World& w);
  static MachineContext machine_context(World& w, std::int64_t now);
  static TraceEntry deliver(World& w, const EventInstance& event, std::int64_t now,
                            std::size_t depth);
  static bool timer_live(const World& w, const EventInstance& event);

  std::vector<TraceEntry> super_step(std::optional<EventInstance> first);
  std::optional<EventInstance> select_lsc();
  std::vector<AssertOutcome> check(const ScriptStep& step) const;
  void require_running() const;

  World world_;
  CoordinatorOptions options_;
  std::int64_t clock_ = 0;
  std::int64_t seq_ = 0;
  std::size_t violation_count_ = 0;
  bool started_ = false;
  bool halted_ = false;
  std::vector<std::string> errors_;
};

}  // namespace rxm
