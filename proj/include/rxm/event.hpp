#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rxm/value.hpp"

namespace rxm {

struct Origin {
  enum class Kind { environment, statechart, lsc, timer };

  Kind kind = Kind::environment;
  std::string machine;  // statechart / timer
  std::string chart;    // lsc
  std::int64_t copy = 0;

  static Origin environment() { return {}; }
  static Origin statechart(std::string machine) { return {Kind::statechart, std::move(machine), {}, 0}; }
  static Origin timer(std::string machine) { return {Kind::timer, std::move(machine), {}, 0}; }
  static Origin lsc(std::string chart, std::int64_t copy) { return {Kind::lsc, {}, std::move(chart), copy}; }

  /// Trace rendering: env, sc:<machine>, lsc:<chart>#<copy>, timer:<machine>.
  std::string to_string() const;

  bool operator==(const Origin&) const = default;
};

/// Identifies which armed timer produced a synthetic timer event.
struct TimerRef {
  int state = 0;
  int transition = 0;
  std::uint64_t generation = 0;

  bool operator==(const TimerRef&) const = default;
};

/// One concrete directed communication. Method calls and signals are not
/// distinguished at runtime.
struct EventInstance {
  std::optional<ObjectRef> source;  // nullopt: the environment
  ObjectRef target;
  std::string name;
  std::vector<Value> args;
  Origin origin;
  std::optional<TimerRef> timer;

  bool from_environment() const { return !source.has_value(); }
  std::string source_id() const { return source ? source->id : "env"; }

  /// Same communication regardless of who produced it.
  bool same_occurrence(const EventInstance& other) const {
    return source == other.source && target == other.target && name == other.name &&
           args == other.args;
  }

  /// Human-readable form: src->dst.name(args).
  std::string describe() const;

  bool operator==(const EventInstance&) const = default;
};

}  // namespace rxm
