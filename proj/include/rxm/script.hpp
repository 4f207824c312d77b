#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rxm/source_loc.hpp"
#include "rxm/value.hpp"

namespace rxm {

struct ScriptStep {
  enum class Kind {
    inject,
    tick,
    assert_property,    // assert obj.prop == literal  (or !=)
    assert_state,       // assert obj in state.path
    assert_clock,       // assert clock == N
    assert_violations,  // assert violations == N
    assert_obligations, // assert obligations == N
  };

  Kind kind = Kind::inject;
  std::optional<std::string> source;  // inject; nullopt: env
  std::string target;                 // inject target / asserted object
  std::string name;                   // event, property, or state path
  std::vector<Value> args;
  Value expected;
  bool negated = false;
  std::int64_t number = 0;  // tick ms or asserted count
  SourceLoc loc;

  /// Canonical script text for this step.
  std::string text() const;

  bool operator==(const ScriptStep&) const = default;
};

using Script = std::vector<ScriptStep>;

}  // namespace rxm
