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

/// Endpoint name for messages that come from outside the system.
inline constexpr std::string_view kEnvLifeline = "env";

struct Lifeline {
  enum class Binding { concrete, symbolic, all };

  std::string name;
  std::string cls;
  Binding binding = Binding::concrete;
  std::string object;             // concrete
  std::optional<Expr> predicate;  // symbolic; the lifeline's own name denotes the candidate
  SourceLoc loc;

  bool operator==(const Lifeline&) const = default;
};

struct ChartVar {
  std::string name;
  ValueKind kind = ValueKind::integer;
  std::string ref_class;
  SourceLoc loc;

  bool operator==(const ChartVar&) const = default;
};

/// Message pattern that must not occur between two labelled locations.
struct Forbid {
  std::string from;
  std::string to;
  std::string name;
  std::optional<std::vector<Expr>> args;  // nullopt: any arguments
  std::string from_label;                 // empty: start of the enclosing segment
  std::string to_label;                   // empty: end of the enclosing segment
  SourceLoc loc;

  bool operator==(const Forbid&) const = default;
};

struct Element;

struct Segment {
  std::vector<Element> elements;
  std::vector<Forbid> forbids;

  bool operator==(const Segment&) const;
};

struct Element {
  enum class Kind { message, sync, cond, loop };
  enum class LoopKind { count, while_expr, each };

  Kind kind = Kind::message;
  std::string label;
  SourceLoc loc;

  // message
  std::string from;
  std::string to;
  std::string name;
  std::vector<Expr> args;  // a bare chart-variable name binds on first match
  bool executed = true;

  bool hot = true;  // message and cond temperature

  // sync / cond; empty cond lifelines means all
  std::vector<std::string> lifelines;

  // cond / while loop
  Expr expr;

  // loop
  LoopKind loop_kind = LoopKind::count;
  std::int64_t count = 0;
  std::string each;  // `all` lifeline iterated by an each loop
  Segment body;

  bool operator==(const Element&) const = default;
};

inline bool Segment::operator==(const Segment& o) const {
  return elements == o.elements && forbids == o.forbids;
}

struct ChartSpec {
  std::string name;
  std::vector<Lifeline> lifelines;
  std::vector<ChartVar> variables;
  Segment body;
  SourceLoc loc;

  int lifeline_index(std::string_view name) const;
  /// Lifelines an element occupies; loops occupy every lifeline.
  std::vector<int> element_lifelines(const Element& e) const;

  bool operator==(const ChartSpec&) const = default;
};

std::vector<Diagnostic> validate_chart(const ChartSpec& spec, const ObjectStore& store);

/// Read access to the world outside a chart copy.
struct ChartContext {
  const ObjectStore* store = nullptr;
  std::function<bool(std::string_view object, const std::vector<std::string>& path)> remote_active;
};

enum class ViolationKind { cold, hot, forbidden };
std::string_view to_string(ViolationKind kind);

struct Violation {
  std::string chart;
  std::int64_t copy = 0;
  ViolationKind kind = ViolationKind::hot;
  EventInstance event;
  std::vector<std::int64_t> cut;

  bool operator==(const Violation&) const = default;
};

enum class AdvanceResult {
  irrelevant,
  progressed,
  completed,
  cold_violation,
  hot_violation,
  forbidden_violation,
};

enum class CopyStatus { running, completed, aborted };

/// Position inside one (possibly nested) segment. frames[0] is the chart body;
/// each further frame is the body of a loop element of the frame before it.
struct Frame {
  int element = -1;  // loop element index in the enclosing segment
  std::int64_t iteration = 0;
  std::vector<char> passed;
  std::vector<std::string> locals;  // bindings made in this iteration

  bool operator==(const Frame&) const = default;
};

struct CopyState {
  std::int64_t id = 0;
  CopyStatus status = CopyStatus::running;
  std::vector<Frame> frames;
  std::map<std::string, Value> bindings;
  std::map<std::string, Value> activation;
  std::vector<std::int64_t> cut;  // per lifeline, number of passed locations

  bool operator==(const CopyState&) const = default;
};

struct EnabledMessage {
  const Element* message = nullptr;
  std::optional<EventInstance> event;  // set when every endpoint and argument resolves
};

/// What an event would do to a copy, computed against the store as it was
/// when the event occurred. Applying it happens after the event's effects.
struct Match {
  AdvanceResult result = AdvanceResult::irrelevant;
  int element = -1;  // progressed: the unified message in the innermost frame
  std::map<std::string, Value> bindings;
};

struct Activation;

/// One running copy of a chart.
class ActiveChart {
 public:
  ActiveChart(std::shared_ptr<const ChartSpec> spec, CopyState state);

  const ChartSpec& spec() const { return *spec_; }
  const std::shared_ptr<const ChartSpec>& spec_ptr() const { return spec_; }
  const CopyState& state() const { return state_; }
  std::int64_t id() const { return state_.id; }
  bool running() const { return state_.status == CopyStatus::running; }

  Match match(const EventInstance& event, const ChartContext& ctx) const;
  /// A violation aborts the copy; `violation` receives the record for every
  /// violation kind, cold included.
  AdvanceResult apply(const Match& m, const EventInstance& event, const ChartContext& ctx,
                      std::optional<Violation>* violation = nullptr);
  AdvanceResult advance(const EventInstance& event, const ChartContext& ctx,
                        std::optional<Violation>* violation = nullptr) {
    return apply(match(event, ctx), event, ctx, violation);
  }

  std::vector<EnabledMessage> enabled_messages(const ChartContext& ctx) const;
  bool is_blocked(const EventInstance& event, const ChartContext& ctx) const;

  /// Hot monitored messages the copy is currently waiting for.
  std::vector<const Element*> obligations() const;

 private:
  friend ActiveChart start_copy(std::shared_ptr<const ChartSpec>, const Activation&,
                                std::int64_t, const EventInstance&, const ChartContext&,
                                std::optional<Violation>*);

  const Segment& segment(std::size_t depth) const;
  bool is_enabled(std::size_t index) const;
  void bind(const std::string& name, Value value);
  void pass(const Element& e, int index);
  AdvanceResult settle(const ChartContext& ctx, const EventInstance& cause,
                       std::optional<Violation>* violation);
  bool loop_continues(const Element& loop, std::int64_t iteration, const ChartContext& ctx) const;
  void start_iteration(const Element& loop, const ChartContext& ctx);
  void leave_loop();
  AdvanceResult fail(ViolationKind kind, const EventInstance& event,
                     std::optional<Violation>* violation);
  bool in_scope(const Forbid& f, std::size_t depth) const;
  const Element* pending_match(const EventInstance& event, const ChartContext& ctx) const;

  std::shared_ptr<const ChartSpec> spec_;
  CopyState state_;
};

/// Attempts to unify a message with an event under `bindings`. On success
/// returns the extended bindings (lifelines and chart variables).
std::optional<std::map<std::string, Value>> unify(const ChartSpec& spec, const Element& msg,
                                                  const EventInstance& event,
                                                  const std::map<std::string, Value>& bindings,
                                                  const ChartContext& ctx);

/// A minimal message of a chart unified with an activating event.
struct Activation {
  int element = -1;
  std::map<std::string, Value> bindings;
};

/// Activations of `spec` by `event`, excluding binding sets already held by a
/// running copy in `running`.
std::vector<Activation> find_activations(const ChartSpec& spec, const EventInstance& event,
                                         const ChartContext& ctx,
                                         const std::vector<const ActiveChart*>& running);

/// A new copy positioned past its activating message and settled. The copy may
/// already be completed or aborted; `violation` reports why.
ActiveChart start_copy(std::shared_ptr<const ChartSpec> spec, const Activation& activation,
                       std::int64_t id, const EventInstance& event, const ChartContext& ctx,
                       std::optional<Violation>* violation = nullptr);

/// find_activations followed by start_copy; only copies still running are
/// returned, violations of the others are appended to `violations`.
std::vector<ActiveChart> try_activate(std::shared_ptr<const ChartSpec> spec,
                                      const EventInstance& event, const ChartContext& ctx,
                                      const std::vector<const ActiveChart*>& running,
                                      std::int64_t& next_id, std::vector<Violation>& violations);

}  // namespace rxm
