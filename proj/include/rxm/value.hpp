#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace rxm {

enum class ValueKind { integer, string, boolean, object_ref };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> parse_value_kind(std::string_view name);

/// Reference to an object in the shared store. The empty id is the null-ref.
struct ObjectRef {
  std::string id;

  bool is_null() const { return id.empty(); }
  bool operator==(const ObjectRef&) const = default;
  auto operator<=>(const ObjectRef&) const = default;
};

class Value {
 public:
  Value() : data_(ObjectRef{}) {}
  Value(std::int64_t v) : data_(v) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(bool v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}
  Value(ObjectRef v) : data_(std::move(v)) {}

  static Value null_ref() { return Value(ObjectRef{}); }
  static Value default_for(ValueKind kind);

  ValueKind kind() const;

  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_ref() const { return std::holds_alternative<ObjectRef>(data_); }

  // Accessors throw Error{kind_mismatch} on the wrong alternative.
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const ObjectRef& as_ref() const;

  /// Literal form as written in model text: 3, "on", true, null, car1.
  std::string to_literal() const;

  bool operator==(const Value&) const = default;

 private:
  std::variant<std::int64_t, bool, std::string, ObjectRef> data_;
};

}  // namespace rxm
