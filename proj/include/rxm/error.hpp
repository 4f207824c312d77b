#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rxm {

enum class ErrorKind {
  duplicate_class,
  duplicate_member,
  malformed_default,
  unknown_class,
  duplicate_object,
  unknown_object,
  kind_mismatch,
  unknown_property,
  unknown_event,
  arity_mismatch,
  class_mismatch,
  invalid_spec,
  already_initialized,
  not_initialized,
  unknown_state,
  run_error,
  duplicate_registration,
  invalid_argument,
  halted,
};

std::string_view to_string(ErrorKind kind);

/// Every engine failure is reported through this one exception type; the kind
/// is what callers and tests branch on, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rxm
