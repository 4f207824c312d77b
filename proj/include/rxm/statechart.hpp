#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxm/event.hpp"
#include "rxm/expr.hpp"
#include "rxm/object_model.hpp"
#include "rxm/source_loc.hpp"

namespace rxm {

enum class StateKind { basic, compound, orthogonal, choice, final_state };

struct Action {
  enum class Kind { assign, raise, send };

  Kind kind = Kind::assign;
  Expr target;  // assign: the written name path; send: the receiving object
  Expr value;   // assign only
  std::string event;
  std::vector<Expr> args;
  SourceLoc loc;

  bool operator==(const Action&) const = default;
};

struct Trigger {
  enum class Kind { none, event, after, every };

  Kind kind = Kind::none;
  std::string event;
  std::vector<std::string> params;
  std::int64_t duration_ms = 0;

  bool is_timer() const { return kind == Kind::after || kind == Kind::every; }
  bool operator==(const Trigger&) const = default;
};

struct Transition {
  Trigger trigger;
  std::optional<Expr> guard;
  bool is_else = false;  // choice fallback branch
  int target = -1;       // -1: internal transition (no exit/entry)
  std::vector<Action> actions;
  SourceLoc loc;

  bool operator==(const Transition&) const = default;
};

struct Region {
  std::vector<int> states;
  int initial = 0;  // index into `states`

  bool operator==(const Region&) const = default;
};

struct StateNode {
  std::string name;
  std::string path;  // dotted from the top level; empty for the root
  StateKind kind = StateKind::basic;
  int parent = -1;
  std::vector<Region> regions;
  std::vector<Action> entry;
  std::vector<Action> exit;
  std::vector<Transition> transitions;
  SourceLoc loc;

  bool operator==(const StateNode&) const = default;
};

struct VarDecl {
  std::string name;
  ValueKind kind = ValueKind::integer;
  std::string ref_class;
  Value initial;
  SourceLoc loc;

  bool operator==(const VarDecl&) const = default;
};

/// A hierarchical state machine definition. states[0] is the implicit root
/// whose regions are the top-level regions; node indices follow document order.
struct StatechartSpec {
  std::string name;
  std::string owner_class;
  std::vector<VarDecl> variables;
  std::vector<EventDecl> internal_events;
  std::vector<StateNode> states;
  SourceLoc loc;

  /// Exact dotted path, or a unique dotted suffix. -1 when absent or ambiguous.
  int find_state(std::string_view path) const;
  bool is_ancestor(int ancestor, int state) const;
  /// Recomputes paths and structural kinds from names, parents and regions.
  void finalize();

  bool operator==(const StatechartSpec&) const = default;
};

/// Resolves the spec a foreign object's machine runs, for cross-machine active().
using MachineSpecLookup = std::function<const StatechartSpec*(std::string_view object_id)>;

/// Validates a finalized spec against the shared class model.
std::vector<Diagnostic> validate_statechart(const StatechartSpec& spec, const ObjectStore& store,
                                            const MachineSpecLookup& remote = {});

/// Everything outside the machine that a step may read or write.
struct MachineContext {
  ObjectStore* store = nullptr;
  std::int64_t now = 0;
  std::function<bool(std::string_view object, const std::vector<std::string>& path)> remote_active;
};

struct StepResult {
  std::vector<std::string> configuration;
  std::vector<EventInstance> emitted;
  bool consumed = false;
  std::vector<std::string> log;
};

struct ArmedTimer {
  int state = 0;
  int transition = 0;
  std::int64_t due = 0;
  std::int64_t period = 0;  // 0 for one-shot
  std::uint64_t seq = 0;
  std::uint64_t generation = 0;

  bool operator==(const ArmedTimer&) const = default;
};

/// Complete mutable state of a machine; used for snapshots.
struct MachineState {
  bool initialized = false;
  std::vector<char> active;
  std::vector<Value> variables;
  std::vector<ArmedTimer> timers;
  std::vector<std::uint64_t> generation;
  std::uint64_t next_timer_seq = 0;

  bool operator==(const MachineState&) const = default;
};

/// One running instance of a StatechartSpec bound to an owner object.
class Machine {
 public:
  static constexpr int kDefaultMaxMicrosteps = 1000;

  Machine(std::shared_ptr<const StatechartSpec> spec, ObjectRef owner, const ObjectStore& store);

  const std::string& id() const { return owner_.id; }
  const ObjectRef& owner() const { return owner_; }
  const StatechartSpec& spec() const { return *spec_; }
  bool initialized() const { return state_.initialized; }

  StepResult initialize(MachineContext& ctx);

  /// One run-to-completion step. Internally raised events are processed as
  /// further microsteps before returning; outgoing events are collected.
  StepResult dispatch(const EventInstance& event, MachineContext& ctx);

  /// Throws Error{unknown_state} for undeclared paths.
  bool is_active(std::string_view path) const;

  /// Due timer firings ordered by (due time, arming order). Periodic timers
  /// re-arm relative to their scheduled time.
  std::vector<EventInstance> due_timers(std::int64_t now);
  std::optional<std::int64_t> next_due() const;

  /// Active leaf state paths in document order.
  std::vector<std::string> configuration() const;
  std::map<std::string, Value> variables() const;
  bool configuration_valid() const;

  const MachineState& state() const { return state_; }
  void restore(MachineState state);

  void set_max_microsteps(int n) { max_microsteps_ = n; }

 private:
  struct Run;

  bool react(int state, const EventInstance& ev, Run& run);
  bool enabled(int state, int index, const EventInstance& ev, Run& run);
  void fire(int state, int index, const EventInstance& ev, Run& run);
  void transition_to(int source, int target, const std::vector<Action>& actions, Run& run);
  int transition_scope(int source, int target) const;
  int region_of(int ancestor, int state) const;
  void enter_path(const std::vector<int>& path, std::size_t i, Run& run);
  void enter_default(const Region& region, Run& run);
  void activate(int state, Run& run);
  void exit_state(int state, Run& run);
  void resolve_choices(Run& run);
  void run_actions(const std::vector<Action>& actions, Run& run);
  void finish(Run& run, StepResult& result);
  int active_child(const Region& region) const;

  std::shared_ptr<const StatechartSpec> spec_;
  ObjectRef owner_;
  MachineState state_;
  int max_microsteps_ = kDefaultMaxMicrosteps;
};

std::string timer_event_name(const Trigger& trigger);

}  // namespace rxm
