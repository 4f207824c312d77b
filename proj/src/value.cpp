#include "rxm/value.hpp"

#include <sstream>

#include "rxm/error.hpp"

namespace rxm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::duplicate_class: return "duplicate-class";
    case ErrorKind::duplicate_member: return "duplicate-member";
    case ErrorKind::malformed_default: return "malformed-default";
    case ErrorKind::unknown_class: return "unknown-class";
    case ErrorKind::duplicate_object: return "duplicate-id";
    case ErrorKind::unknown_object: return "unknown-object";
    case ErrorKind::kind_mismatch: return "kind-mismatch";
    case ErrorKind::unknown_property: return "unknown-property";
    case ErrorKind::unknown_event: return "unknown-event";
    case ErrorKind::arity_mismatch: return "arity-mismatch";
    case ErrorKind::class_mismatch: return "class-mismatch";
    case ErrorKind::invalid_spec: return "invalid-spec";
    case ErrorKind::already_initialized: return "already-initialized";
    case ErrorKind::not_initialized: return "not-initialized";
    case ErrorKind::unknown_state: return "unknown-state";
    case ErrorKind::run_error: return "run-error";
    case ErrorKind::duplicate_registration: return "duplicate-registration";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::halted: return "halted";
  }
  return "error";
}

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::integer: return "int";
    case ValueKind::string: return "string";
    case ValueKind::boolean: return "bool";
    case ValueKind::object_ref: return "ref";
  }
  return "?";
}

std::optional<ValueKind> parse_value_kind(std::string_view name) {
  if (name == "int") return ValueKind::integer;
  if (name == "string") return ValueKind::string;
  if (name == "bool") return ValueKind::boolean;
  if (name == "ref") return ValueKind::object_ref;
  return std::nullopt;
}

Value Value::default_for(ValueKind kind) {
  switch (kind) {
    case ValueKind::integer: return Value(std::int64_t{0});
    case ValueKind::string: return Value(std::string{});
    case ValueKind::boolean: return Value(false);
    case ValueKind::object_ref: return null_ref();
  }
  return null_ref();
}

ValueKind Value::kind() const {
  switch (data_.index()) {
    case 0: return ValueKind::integer;
    case 1: return ValueKind::boolean;
    case 2: return ValueKind::string;
    default: return ValueKind::object_ref;
  }
}

namespace {

[[noreturn]] void wrong_kind(ValueKind want, ValueKind have) {
  throw Error(ErrorKind::kind_mismatch, "expected " + std::string(to_string(want)) +
                                            " value, got " + std::string(to_string(have)));
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::int64_t Value::as_int() const {
  if (!is_int()) wrong_kind(ValueKind::integer, kind());
  return std::get<std::int64_t>(data_);
}

bool Value::as_bool() const {
  if (!is_bool()) wrong_kind(ValueKind::boolean, kind());
  return std::get<bool>(data_);
}

const std::string& Value::as_string() const {
  if (!is_string()) wrong_kind(ValueKind::string, kind());
  return std::get<std::string>(data_);
}

const ObjectRef& Value::as_ref() const {
  if (!is_ref()) wrong_kind(ValueKind::object_ref, kind());
  return std::get<ObjectRef>(data_);
}

std::string Value::to_literal() const {
  switch (kind()) {
    case ValueKind::integer: return std::to_string(as_int());
    case ValueKind::boolean: return as_bool() ? "true" : "false";
    case ValueKind::string: return quote(as_string());
    case ValueKind::object_ref: return as_ref().is_null() ? "null" : as_ref().id;
  }
  return {};
}

}  // namespace rxm
