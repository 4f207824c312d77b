#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxm/source_loc.hpp"
#include "rxm/value.hpp"

namespace rxm {

/// Expression tree shared by guards, conditions, binding expressions, query
/// predicates and message arguments.
struct Expr {
  enum class Op {
    literal,
    name,     // path: a or a.b.c
    active,   // active(path) or active(object::path)
    negate,
    logical_not,
    add, sub, mul, div, mod,
    eq, ne, lt, le, gt, ge,
    logical_and, logical_or,
    ternary,
  };

  Op op = Op::literal;
  Value literal;
  std::vector<std::string> path;
  std::string object;  // active() target machine owner; empty means own machine
  std::vector<Expr> kids;
  SourceLoc loc;

  static Expr make_literal(Value v, SourceLoc loc = {});
  static Expr make_name(std::vector<std::string> path, SourceLoc loc = {});
  static Expr make_unary(Op op, Expr operand, SourceLoc loc = {});
  static Expr make_binary(Op op, Expr lhs, Expr rhs, SourceLoc loc = {});

  bool is_bare_name() const { return op == Op::name && path.size() == 1; }
  std::string dotted() const;

  bool operator==(const Expr&) const = default;
};

/// Name resolution for evaluation. Implemented separately by machines, chart
/// copies, and query predicates.
class EvalScope {
 public:
  virtual ~EvalScope() = default;

  /// Resolves a bare identifier; nullopt when the name means nothing here.
  virtual std::optional<Value> lookup(std::string_view name) const = 0;
  virtual Value property(const ObjectRef& object, std::string_view name) const = 0;
  virtual bool active(std::string_view object, const std::vector<std::string>& path) const;
};

/// Throws Error{run_error} for division by zero or unresolved names, and
/// Error{kind_mismatch} on operand kind errors.
Value evaluate(const Expr& expr, const EvalScope& scope);
bool evaluate_bool(const Expr& expr, const EvalScope& scope);

/// Static type used during validation. `any` is produced when the static kind
/// is unknown (event parameters, properties reached through untyped refs).
struct Type {
  enum class Tag { integer, string, boolean, ref, null, any };
  Tag tag = Tag::any;
  std::string cls;  // class name for refs when known

  static Type of(ValueKind kind, std::string cls = {});
  static Type any() { return {}; }
  bool is(Tag t) const { return tag == t || tag == Tag::any; }
};

class TypeScope {
 public:
  virtual ~TypeScope() = default;
  virtual std::optional<Type> name_type(std::string_view name) const = 0;
  virtual std::optional<Type> property_type(const std::string& cls, std::string_view name) const = 0;
  /// Returns an error message when the active() reference is invalid.
  virtual std::optional<std::string> check_active(std::string_view object,
                                                  const std::vector<std::string>& path) const;
};

/// Appends diagnostics for unknown names and operand mismatches.
Type check_expr(const Expr& expr, const TypeScope& scope, std::vector<Diagnostic>& out);

/// Canonical text with minimal parentheses; parsing it yields an equal tree.
std::string to_text(const Expr& expr);

}  // namespace rxm
