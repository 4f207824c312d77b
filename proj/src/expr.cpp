#include "rxm/expr.hpp"

#include <limits>

#include "rxm/error.hpp"

namespace rxm {

Expr Expr::make_literal(Value v, SourceLoc loc) {
  Expr e;
  e.op = Op::literal;
  e.literal = std::move(v);
  e.loc = loc;
  return e;
}

Expr Expr::make_name(std::vector<std::string> path, SourceLoc loc) {
  Expr e;
  e.op = Op::name;
  e.path = std::move(path);
  e.loc = loc;
  return e;
}

Expr Expr::make_unary(Op op, Expr operand, SourceLoc loc) {
  Expr e;
  e.op = op;
  e.kids.push_back(std::move(operand));
  e.loc = loc;
  return e;
}

Expr Expr::make_binary(Op op, Expr lhs, Expr rhs, SourceLoc loc) {
  Expr e;
  e.op = op;
  e.kids.push_back(std::move(lhs));
  e.kids.push_back(std::move(rhs));
  e.loc = loc;
  return e;
}

std::string Expr::dotted() const {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out;
}

bool EvalScope::active(std::string_view, const std::vector<std::string>& path) const {
  std::string joined;
  for (const auto& p : path) joined += (joined.empty() ? "" : ".") + p;
  throw Error(ErrorKind::run_error, "active(" + joined + ") is not available in this context");
}

std::optional<std::string> TypeScope::check_active(std::string_view,
                                                   const std::vector<std::string>&) const {
  return std::string("active() is not available in this context");
}

namespace {

using Op = Expr::Op;

Value eval(const Expr& e, const EvalScope& scope);

std::int64_t int_operand(const Expr& e, const EvalScope& scope) {
  return eval(e, scope).as_int();
}

enum class Arith { add, sub, mul };

std::int64_t checked(Arith op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case Arith::add: overflow = __builtin_add_overflow(a, b, &r); break;
    case Arith::sub: overflow = __builtin_sub_overflow(a, b, &r); break;
    case Arith::mul: overflow = __builtin_mul_overflow(a, b, &r); break;
  }
  if (overflow) throw Error(ErrorKind::run_error, "integer overflow");
  return r;
}

Value eval_name(const Expr& e, const EvalScope& scope) {
  auto head = scope.lookup(e.path.front());
  if (!head) throw Error(ErrorKind::run_error, "unresolved name '" + e.path.front() + "'");
  Value v = std::move(*head);
  for (std::size_t i = 1; i < e.path.size(); ++i) {
    const ObjectRef& ref = v.as_ref();
    if (ref.is_null()) {
      throw Error(ErrorKind::run_error, "null reference while reading '" + e.dotted() + "'");
    }
    v = scope.property(ref, e.path[i]);
  }
  return v;
}

Value eval(const Expr& e, const EvalScope& scope) {
  switch (e.op) {
    case Op::literal: return e.literal;
    case Op::name: return eval_name(e, scope);
    case Op::active: return scope.active(e.object, e.path);
    case Op::negate: {
      return checked(Arith::sub, 0, int_operand(e.kids[0], scope));
    }
    case Op::logical_not: return !eval(e.kids[0], scope).as_bool();
    case Op::add: {
      Value a = eval(e.kids[0], scope);
      Value b = eval(e.kids[1], scope);
      if (a.is_string()) return a.as_string() + b.as_string();
      return checked(Arith::add, a.as_int(), b.as_int());
    }
    case Op::sub: {
      auto a = int_operand(e.kids[0], scope);
      return checked(Arith::sub, a, int_operand(e.kids[1], scope));
    }
    case Op::mul: {
      auto a = int_operand(e.kids[0], scope);
      return checked(Arith::mul, a, int_operand(e.kids[1], scope));
    }
    case Op::div:
    case Op::mod: {
      auto a = int_operand(e.kids[0], scope);
      auto b = int_operand(e.kids[1], scope);
      if (b == 0) throw Error(ErrorKind::run_error, "division by zero");
      if (b == -1 && a == std::numeric_limits<std::int64_t>::min()) {
        throw Error(ErrorKind::run_error, "integer overflow");
      }
      return e.op == Op::div ? a / b : a % b;
    }
    case Op::eq: return eval(e.kids[0], scope) == eval(e.kids[1], scope);
    case Op::ne: return !(eval(e.kids[0], scope) == eval(e.kids[1], scope));
    case Op::lt: return int_operand(e.kids[0], scope) < int_operand(e.kids[1], scope);
    case Op::le: return int_operand(e.kids[0], scope) <= int_operand(e.kids[1], scope);
    case Op::gt: return int_operand(e.kids[0], scope) > int_operand(e.kids[1], scope);
    case Op::ge: return int_operand(e.kids[0], scope) >= int_operand(e.kids[1], scope);
    case Op::logical_and:
      return eval(e.kids[0], scope).as_bool() && eval(e.kids[1], scope).as_bool();
    case Op::logical_or:
      return eval(e.kids[0], scope).as_bool() || eval(e.kids[1], scope).as_bool();
    case Op::ternary:
      return eval(e.kids[0], scope).as_bool() ? eval(e.kids[1], scope) : eval(e.kids[2], scope);
  }
  return Value::null_ref();
}

std::string describe(const Type& t) {
  switch (t.tag) {
    case Type::Tag::integer: return "int";
    case Type::Tag::string: return "string";
    case Type::Tag::boolean: return "bool";
    case Type::Tag::ref: return t.cls.empty() ? "ref" : "ref " + t.cls;
    case Type::Tag::null: return "null";
    case Type::Tag::any: return "any";
  }
  return "?";
}

bool compatible(const Type& a, const Type& b) {
  using T = Type::Tag;
  if (a.tag == T::any || b.tag == T::any) return true;
  auto refish = [](const Type& t) { return t.tag == T::ref || t.tag == T::null; };
  if (refish(a) && refish(b)) return true;
  return a.tag == b.tag;
}

struct Checker {
  const TypeScope& scope;
  std::vector<Diagnostic>& out;

  void expect(const Expr& e, const Type& t, Type::Tag want) {
    if (!t.is(want)) {
      Type w;
      w.tag = want;
      out.push_back({e.loc, "expected " + describe(w) + " operand, got " + describe(t)});
    }
  }

  Type name(const Expr& e) {
    auto t = scope.name_type(e.path.front());
    if (!t) {
      out.push_back({e.loc, "unknown name '" + e.path.front() + "'"});
      return Type::any();
    }
    Type cur = *t;
    for (std::size_t i = 1; i < e.path.size(); ++i) {
      if (cur.tag == Type::Tag::any) return Type::any();
      if (cur.tag != Type::Tag::ref) {
        out.push_back({e.loc, "'" + e.dotted() + "': cannot read property '" + e.path[i] +
                                  "' of a " + describe(cur) + " value"});
        return Type::any();
      }
      if (cur.cls.empty()) return Type::any();
      auto p = scope.property_type(cur.cls, e.path[i]);
      if (!p) {
        out.push_back({e.loc, "class " + cur.cls + " has no property '" + e.path[i] + "'"});
        return Type::any();
      }
      cur = *p;
    }
    return cur;
  }

  Type check(const Expr& e) {
    using T = Type::Tag;
    auto simple = [](T tag) {
      Type t;
      t.tag = tag;
      return t;
    };
    switch (e.op) {
      case Op::literal: {
        if (e.literal.is_ref()) return e.literal.as_ref().is_null() ? simple(T::null) : simple(T::ref);
        return Type::of(e.literal.kind());
      }
      case Op::name: return name(e);
      case Op::active: {
        if (auto err = scope.check_active(e.object, e.path)) out.push_back({e.loc, *err});
        return simple(T::boolean);
      }
      case Op::negate: expect(e, check(e.kids[0]), T::integer); return simple(T::integer);
      case Op::logical_not: expect(e, check(e.kids[0]), T::boolean); return simple(T::boolean);
      case Op::add: {
        Type a = check(e.kids[0]);
        Type b = check(e.kids[1]);
        if (a.tag == T::string || b.tag == T::string) {
          expect(e.kids[0], a, T::string);
          expect(e.kids[1], b, T::string);
          return simple(T::string);
        }
        expect(e.kids[0], a, T::integer);
        expect(e.kids[1], b, T::integer);
        return a.tag == T::any && b.tag == T::any ? Type::any() : simple(T::integer);
      }
      case Op::sub:
      case Op::mul:
      case Op::div:
      case Op::mod:
        expect(e.kids[0], check(e.kids[0]), T::integer);
        expect(e.kids[1], check(e.kids[1]), T::integer);
        return simple(T::integer);
      case Op::lt:
      case Op::le:
      case Op::gt:
      case Op::ge:
        expect(e.kids[0], check(e.kids[0]), T::integer);
        expect(e.kids[1], check(e.kids[1]), T::integer);
        return simple(T::boolean);
      case Op::eq:
      case Op::ne: {
        Type a = check(e.kids[0]);
        Type b = check(e.kids[1]);
        if (!compatible(a, b)) {
          out.push_back({e.loc, "cannot compare " + describe(a) + " with " + describe(b)});
        }
        return simple(T::boolean);
      }
      case Op::logical_and:
      case Op::logical_or:
        expect(e.kids[0], check(e.kids[0]), T::boolean);
        expect(e.kids[1], check(e.kids[1]), T::boolean);
        return simple(T::boolean);
      case Op::ternary: {
        expect(e.kids[0], check(e.kids[0]), T::boolean);
        Type a = check(e.kids[1]);
        Type b = check(e.kids[2]);
        if (!compatible(a, b)) {
          out.push_back({e.loc, "ternary branches differ: " + describe(a) + " vs " + describe(b)});
        }
        return a.tag == T::any ? b : a;
      }
    }
    return Type::any();
  }
};

int precedence(Op op) {
  switch (op) {
    case Op::ternary: return 1;
    case Op::logical_or: return 2;
    case Op::logical_and: return 3;
    case Op::eq:
    case Op::ne: return 4;
    case Op::lt:
    case Op::le:
    case Op::gt:
    case Op::ge: return 5;
    case Op::add:
    case Op::sub: return 6;
    case Op::mul:
    case Op::div:
    case Op::mod: return 7;
    case Op::negate:
    case Op::logical_not: return 8;
    default: return 9;
  }
}

std::string_view symbol(Op op) {
  switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::mod: return "%";
    case Op::eq: return "==";
    case Op::ne: return "!=";
    case Op::lt: return "<";
    case Op::le: return "<=";
    case Op::gt: return ">";
    case Op::ge: return ">=";
    case Op::logical_and: return "&&";
    case Op::logical_or: return "||";
    case Op::negate: return "-";
    case Op::logical_not: return "!";
    default: return "?";
  }
}

std::string wrap(const Expr& e, bool parens) {
  return parens ? "(" + to_text(e) + ")" : to_text(e);
}

}  // namespace

Value evaluate(const Expr& expr, const EvalScope& scope) { return eval(expr, scope); }

bool evaluate_bool(const Expr& expr, const EvalScope& scope) {
  return eval(expr, scope).as_bool();
}

Type Type::of(ValueKind kind, std::string cls) {
  Type t;
  switch (kind) {
    case ValueKind::integer: t.tag = Tag::integer; break;
    case ValueKind::string: t.tag = Tag::string; break;
    case ValueKind::boolean: t.tag = Tag::boolean; break;
    case ValueKind::object_ref: t.tag = Tag::ref; break;
  }
  t.cls = std::move(cls);
  return t;
}

Type check_expr(const Expr& expr, const TypeScope& scope, std::vector<Diagnostic>& out) {
  Checker c{scope, out};
  return c.check(expr);
}

std::string to_text(const Expr& e) {
  int p = precedence(e.op);
  switch (e.op) {
    case Op::literal: return e.literal.to_literal();
    case Op::name: return e.dotted();
    case Op::active: {
      std::string s = "active(";
      if (!e.object.empty()) s += e.object + "::";
      s += e.dotted();
      return s + ")";
    }
    case Op::negate:
    case Op::logical_not: {
      const Expr& k = e.kids[0];
      // The parser folds "-5" into a literal, so a negated int literal keeps parens.
      bool parens = precedence(k.op) < p ||
                    (e.op == Op::negate && k.op == Op::literal && k.literal.is_int());
      return std::string(symbol(e.op)) + wrap(k, parens);
    }
    case Op::ternary:
      return wrap(e.kids[0], precedence(e.kids[0].op) <= p) + " ? " +
             wrap(e.kids[1], precedence(e.kids[1].op) <= p) + " : " +
             wrap(e.kids[2], precedence(e.kids[2].op) < p);
    default: {
      const Expr& l = e.kids[0];
      const Expr& r = e.kids[1];
      return wrap(l, precedence(l.op) < p) + " " + std::string(symbol(e.op)) + " " +
             wrap(r, precedence(r.op) <= p);
    }
  }
}

}  // namespace rxm
