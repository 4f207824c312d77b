#include "rxm/lsc.hpp"

#include <algorithm>
#include <set>

#include "rxm/error.hpp"

namespace rxm {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::cold: return "cold";
    case ViolationKind::hot: return "hot";
    case ViolationKind::forbidden: return "forbidden";
  }
  return "hot";
}

int ChartSpec::lifeline_index(std::string_view name) const {
  for (std::size_t i = 0; i < lifelines.size(); ++i) {
    if (lifelines[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> ChartSpec::element_lifelines(const Element& e) const {
  std::vector<int> out;
  auto add = [&](std::string_view name) {
    int i = lifeline_index(name);
    if (i >= 0 && std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  };
  switch (e.kind) {
    case Element::Kind::message:
      add(e.from);
      add(e.to);
      break;
    case Element::Kind::sync:
      for (const auto& l : e.lifelines) add(l);
      break;
    case Element::Kind::cond:
      if (!e.lifelines.empty()) {
        for (const auto& l : e.lifelines) add(l);
        break;
      }
      [[fallthrough]];
    case Element::Kind::loop:
      for (std::size_t i = 0; i < lifelines.size(); ++i) out.push_back(static_cast<int>(i));
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool overlaps(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  }
  return false;
}

const ChartVar* find_var(const ChartSpec& spec, std::string_view name) {
  for (const auto& v : spec.variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Name resolution inside a copy. Unbound symbolic lifelines resolve to the
// first object (creation order) satisfying their binding expression; such
// tentative choices are collected so a caller can commit them.

class CopyScope : public EvalScope {
 public:
  CopyScope(const ChartSpec& spec, const std::map<std::string, Value>& bindings,
            const ChartContext& ctx, std::map<std::string, Value>& tentative)
      : spec_(spec), bindings_(bindings), ctx_(ctx), tentative_(tentative) {}

  std::optional<Value> lookup(std::string_view name) const override {
    if (candidate_ && name == candidate_->first) return candidate_->second;
    if (auto it = bindings_.find(std::string(name)); it != bindings_.end()) return it->second;
    if (auto it = tentative_.find(std::string(name)); it != tentative_.end()) return it->second;
    int li = spec_.lifeline_index(name);
    if (li >= 0) {
      const Lifeline& l = spec_.lifelines[li];
      if (l.binding == Lifeline::Binding::concrete) return Value(ObjectRef{l.object});
      if (l.binding == Lifeline::Binding::all) return std::nullopt;
      if (auto ref = resolve(l)) {
        tentative_[l.name] = Value(*ref);
        return Value(*ref);
      }
      return std::nullopt;
    }
    if (find_var(spec_, name)) return std::nullopt;
    if (ctx_.store->contains(name)) return Value(ObjectRef{std::string(name)});
    return std::nullopt;
  }

  Value property(const ObjectRef& obj, std::string_view name) const override {
    return ctx_.store->get(obj, name);
  }

  bool active(std::string_view object, const std::vector<std::string>& path) const override {
    if (!ctx_.remote_active || object.empty()) {
      throw Error(ErrorKind::run_error, "active() in a chart needs an object");
    }
    return ctx_.remote_active(object, path);
  }

  /// Whether `candidate` satisfies the binding expression of `l`.
  bool admits(const Lifeline& l, const ObjectRef& candidate) const {
    if (ctx_.store->class_of(candidate).name != l.cls) return false;
    if (l.binding == Lifeline::Binding::concrete) return candidate.id == l.object;
    if (!l.predicate) return true;
    if (std::find(resolving_.begin(), resolving_.end(), l.name) != resolving_.end()) return false;
    CopyScope inner(spec_, bindings_, ctx_, tentative_);
    inner.resolving_ = resolving_;
    inner.resolving_.push_back(l.name);
    inner.candidate_ = std::make_pair(l.name, Value(candidate));
    try {
      return evaluate_bool(*l.predicate, inner);
    } catch (const Error&) {
      return false;
    }
  }

 private:
  std::optional<ObjectRef> resolve(const Lifeline& l) const {
    auto cls = ctx_.store->find_class(l.cls);
    if (!cls) return std::nullopt;
    for (const auto& ref : ctx_.store->objects_of(*cls)) {
      if (admits(l, ref)) return ref;
    }
    return std::nullopt;
  }

  const ChartSpec& spec_;
  const std::map<std::string, Value>& bindings_;
  const ChartContext& ctx_;
  std::map<std::string, Value>& tentative_;
  std::optional<std::pair<std::string, Value>> candidate_;
  std::vector<std::string> resolving_;
};

// Shared by messages and forbid patterns; `args` null matches any arguments.
std::optional<std::map<std::string, Value>> unify_pattern(
    const ChartSpec& spec, const std::string& from, const std::string& to,
    const std::string& name, const std::vector<Expr>* args, const EventInstance& event,
    const std::map<std::string, Value>& bindings, const ChartContext& ctx) {
  if (event.name != name) return std::nullopt;
  if (args && args->size() != event.args.size()) return std::nullopt;
  auto out = bindings;

  auto endpoint = [&](const std::string& lifeline, const std::optional<ObjectRef>& actual) {
    if (lifeline == kEnvLifeline) return !actual.has_value();
    if (!actual) return false;
    if (auto it = out.find(lifeline); it != out.end()) return it->second == Value(*actual);
    int li = spec.lifeline_index(lifeline);
    if (li < 0) return false;
    const Lifeline& l = spec.lifelines[li];
    if (l.binding == Lifeline::Binding::all) return false;
    std::map<std::string, Value> tentative;
    CopyScope scope(spec, out, ctx, tentative);
    if (!ctx.store->contains(actual->id) || !scope.admits(l, *actual)) return false;
    out[lifeline] = Value(*actual);
    return true;
  };
  if (!endpoint(from, event.source)) return std::nullopt;
  if (!endpoint(to, std::optional<ObjectRef>(event.target))) return std::nullopt;

  if (!args) return out;
  for (std::size_t i = 0; i < args->size(); ++i) {
    const Expr& term = (*args)[i];
    const Value& actual = event.args[i];
    if (term.is_bare_name()) {
      if (const ChartVar* var = find_var(spec, term.path[0])) {
        if (auto it = out.find(var->name); it != out.end()) {
          if (!(it->second == actual)) return std::nullopt;
        } else {
          if (actual.kind() != var->kind) return std::nullopt;
          out[var->name] = actual;
        }
        continue;
      }
    }
    std::map<std::string, Value> tentative;
    CopyScope scope(spec, out, ctx, tentative);
    try {
      if (!(evaluate(term, scope) == actual)) return std::nullopt;
    } catch (const Error&) {
      return std::nullopt;
    }
    for (auto& [k, v] : tentative) out.emplace(k, v);
  }
  return out;
}

std::map<std::string, Value> initial_bindings(const ChartSpec& spec) {
  std::map<std::string, Value> out;
  for (const auto& l : spec.lifelines) {
    if (l.binding == Lifeline::Binding::concrete) out[l.name] = Value(ObjectRef{l.object});
  }
  return out;
}

std::vector<int> minimal_elements(const ChartSpec& spec) {
  std::vector<int> out;
  const auto& els = spec.body.elements;
  for (std::size_t j = 0; j < els.size(); ++j) {
    auto lj = spec.element_lifelines(els[j]);
    bool minimal = true;
    for (std::size_t k = 0; k < j && minimal; ++k) {
      if (overlaps(lj, spec.element_lifelines(els[k]))) minimal = false;
    }
    if (minimal) out.push_back(static_cast<int>(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

class ChartTypes : public TypeScope {
 public:
  ChartTypes(const ChartSpec& spec, const ObjectStore& store) : spec_(spec), store_(store) {}

  std::optional<Type> name_type(std::string_view name) const override {
    int li = spec_.lifeline_index(name);
    if (li >= 0) return Type::of(ValueKind::object_ref, spec_.lifelines[li].cls);
    if (const ChartVar* v = find_var(spec_, name)) return Type::of(v->kind, v->ref_class);
    if (store_.contains(name)) {
      return Type::of(ValueKind::object_ref, store_.class_of(ObjectRef{std::string(name)}).name);
    }
    return std::nullopt;
  }

  std::optional<Type> property_type(const std::string& cls, std::string_view name) const override {
    auto id = store_.find_class(cls);
    if (!id) return std::nullopt;
    const auto* p = store_.class_def(*id).find_property(name);
    if (!p) return std::nullopt;
    return Type::of(p->kind, p->ref_class);
  }

  std::optional<std::string> check_active(std::string_view object,
                                          const std::vector<std::string>&) const override {
    if (object.empty()) return "active() in a chart needs an object";
    if (!store_.contains(object)) return "active(): unknown object '" + std::string(object) + "'";
    return std::nullopt;
  }

 private:
  const ChartSpec& spec_;
  const ObjectStore& store_;
};

struct ChartValidator {
  ChartValidator(const ChartSpec& s, const ObjectStore& st) : spec(s), store(st), types(s, st) {}

  const ChartSpec& spec;
  const ObjectStore& store;
  ChartTypes types;
  std::vector<Diagnostic> out;
  std::set<std::string> labels;

  void error(SourceLoc loc, std::string msg) {
    out.push_back({loc, "chart '" + spec.name + "': " + std::move(msg)});
  }

  bool lifeline_usable(const std::string& name, const std::vector<std::string>& each, SourceLoc loc,
                       bool allow_env) {
    if (name == kEnvLifeline) {
      if (!allow_env) error(loc, "'env' cannot be used here");
      return allow_env;
    }
    int li = spec.lifeline_index(name);
    if (li < 0) {
      error(loc, "undeclared lifeline '" + name + "'");
      return false;
    }
    if (spec.lifelines[li].binding == Lifeline::Binding::all &&
        std::find(each.begin(), each.end(), name) == each.end()) {
      error(loc, "lifeline '" + name + "' ranges over all instances; use it inside 'loop each " +
                     name + "'");
    }
    return true;
  }

  void check_event(const std::string& to, const std::string& name, std::size_t arity, SourceLoc loc) {
    int li = spec.lifeline_index(to);
    if (li < 0) return;
    auto cls = store.find_class(spec.lifelines[li].cls);
    if (!cls) return;
    auto declared = store.class_def(*cls).event_arity(name);
    if (!declared) {
      error(loc, "class " + spec.lifelines[li].cls + " does not declare event '" + name + "'");
    } else if (static_cast<std::size_t>(*declared) != arity) {
      error(loc, "event '" + name + "' expects " + std::to_string(*declared) + " argument(s)");
    }
  }

  void check_args(const std::vector<Expr>& args) {
    for (const auto& a : args) {
      if (a.is_bare_name() && find_var(spec, a.path[0])) continue;
      check_expr(a, types, out);
    }
  }

  void collect_labels(const Segment& seg) {
    for (const auto& e : seg.elements) {
      if (!e.label.empty() && !labels.insert(e.label).second) {
        error(e.loc, "label '" + e.label + "' used twice");
      }
      if (e.kind == Element::Kind::loop) collect_labels(e.body);
    }
  }

  int label_index(const Segment& seg, const std::string& label) {
    for (std::size_t j = 0; j < seg.elements.size(); ++j) {
      if (seg.elements[j].label == label) return static_cast<int>(j);
    }
    return -1;
  }

  void check_segment(const Segment& seg, std::vector<std::string> each) {
    for (const auto& e : seg.elements) {
      switch (e.kind) {
        case Element::Kind::message: {
          bool from_ok = lifeline_usable(e.from, each, e.loc, true);
          bool to_ok = lifeline_usable(e.to, each, e.loc, false);
          if (e.executed && e.from == kEnvLifeline) {
            error(e.loc, "message '" + e.name + "' from env must be monitored");
          }
          if (from_ok && to_ok) check_event(e.to, e.name, e.args.size(), e.loc);
          check_args(e.args);
          break;
        }
        case Element::Kind::sync:
          if (e.lifelines.empty()) error(e.loc, "sync needs at least one lifeline");
          for (const auto& l : e.lifelines) lifeline_usable(l, each, e.loc, false);
          break;
        case Element::Kind::cond: {
          for (const auto& l : e.lifelines) lifeline_usable(l, each, e.loc, false);
          Type t = check_expr(e.expr, types, out);
          if (!t.is(Type::Tag::boolean)) error(e.loc, "condition is not boolean");
          break;
        }
        case Element::Kind::loop: {
          auto inner = each;
          if (e.loop_kind == Element::LoopKind::count && e.count < 0) {
            error(e.loc, "loop count must be non-negative");
          }
          if (e.loop_kind == Element::LoopKind::while_expr) {
            Type t = check_expr(e.expr, types, out);
            if (!t.is(Type::Tag::boolean)) error(e.loc, "loop condition is not boolean");
          }
          if (e.loop_kind == Element::LoopKind::each) {
            int li = spec.lifeline_index(e.each);
            if (li < 0 || spec.lifelines[li].binding != Lifeline::Binding::all) {
              error(e.loc, "'loop each' needs a lifeline declared 'all', got '" + e.each + "'");
            }
            inner.push_back(e.each);
          }
          if (e.body.elements.empty()) error(e.loc, "empty loop body");
          check_segment(e.body, inner);
          break;
        }
      }
    }
    for (const auto& f : seg.forbids) {
      bool from_ok = lifeline_usable(f.from, each, f.loc, true);
      bool to_ok = lifeline_usable(f.to, each, f.loc, false);
      if (from_ok && to_ok && f.args) check_event(f.to, f.name, f.args->size(), f.loc);
      if (f.args) check_args(*f.args);
      int from = -1;
      int to = static_cast<int>(seg.elements.size());
      for (auto [label, index] : {std::pair{&f.from_label, &from}, std::pair{&f.to_label, &to}}) {
        if (label->empty()) continue;
        *index = label_index(seg, *label);
        if (*index < 0) {
          error(f.loc, labels.count(*label)
                           ? "forbid scope label '" + *label + "' lies in another loop body"
                           : "unknown label '" + *label + "'");
        }
      }
      if (from >= 0 && !f.to_label.empty() && to >= 0 && to <= from) {
        error(f.loc, "forbid scope ends before it starts");
      }
    }
  }

  void run() {
    std::set<std::string> names;
    for (const auto& l : spec.lifelines) {
      if (l.name == kEnvLifeline) error(l.loc, "'env' is reserved");
      if (!names.insert(l.name).second) error(l.loc, "lifeline '" + l.name + "' declared twice");
      auto cls = store.find_class(l.cls);
      if (!cls) {
        error(l.loc, "lifeline '" + l.name + "': unknown class '" + l.cls + "'");
        continue;
      }
      if (l.binding == Lifeline::Binding::concrete) {
        if (!store.contains(l.object)) {
          error(l.loc, "lifeline '" + l.name + "': unknown object '" + l.object + "'");
        } else if (store.class_of(ObjectRef{l.object}).name != l.cls) {
          error(l.loc, "lifeline '" + l.name + "': object '" + l.object + "' is not a " + l.cls);
        }
      }
      if (l.predicate) {
        Type t = check_expr(*l.predicate, types, out);
        if (!t.is(Type::Tag::boolean)) error(l.loc, "binding expression is not boolean");
      }
    }
    for (const auto& v : spec.variables) {
      if (!names.insert(v.name).second) error(v.loc, "name '" + v.name + "' declared twice");
    }
    if (spec.body.elements.empty()) {
      error(spec.loc, "chart has no elements");
      return;
    }
    collect_labels(spec.body);
    check_segment(spec.body, {});
    for (int j : minimal_elements(spec)) {
      const Element& e = spec.body.elements[j];
      if (e.kind != Element::Kind::message || e.executed) {
        error(e.loc, "minimal element must be a monitored message");
      }
    }
  }
};

}  // namespace

std::vector<Diagnostic> validate_chart(const ChartSpec& spec, const ObjectStore& store) {
  ChartValidator v(spec, store);
  v.run();
  return std::move(v.out);
}

std::optional<std::map<std::string, Value>> unify(const ChartSpec& spec, const Element& msg,
                                                  const EventInstance& event,
                                                  const std::map<std::string, Value>& bindings,
                                                  const ChartContext& ctx) {
  if (msg.kind != Element::Kind::message) return std::nullopt;
  return unify_pattern(spec, msg.from, msg.to, msg.name, &msg.args, event, bindings, ctx);
}

// ---------------------------------------------------------------------------
// Copies

ActiveChart::ActiveChart(std::shared_ptr<const ChartSpec> spec, CopyState state)
    : spec_(std::move(spec)), state_(std::move(state)) {
  if (state_.frames.empty()) {
    state_.frames.push_back(Frame{-1, 0, std::vector<char>(spec_->body.elements.size(), 0), {}});
  }
  if (state_.cut.empty()) state_.cut.assign(spec_->lifelines.size(), 0);
}

const Segment& ActiveChart::segment(std::size_t depth) const {
  const Segment* seg = &spec_->body;
  for (std::size_t d = 1; d <= depth; ++d) seg = &seg->elements[state_.frames[d].element].body;
  return *seg;
}

bool ActiveChart::is_enabled(std::size_t index) const {
  const Frame& f = state_.frames.back();
  if (f.passed[index]) return false;
  const Segment& seg = segment(state_.frames.size() - 1);
  auto mine = spec_->element_lifelines(seg.elements[index]);
  for (std::size_t k = 0; k < index; ++k) {
    if (!f.passed[k] && overlaps(mine, spec_->element_lifelines(seg.elements[k]))) return false;
  }
  return true;
}

void ActiveChart::bind(const std::string& name, Value value) {
  if (state_.bindings.count(name)) return;
  state_.bindings.emplace(name, std::move(value));
  if (state_.frames.size() > 1) state_.frames.back().locals.push_back(name);
}

void ActiveChart::pass(const Element& e, int index) {
  state_.frames.back().passed[index] = 1;
  for (int l : spec_->element_lifelines(e)) ++state_.cut[l];
}

AdvanceResult ActiveChart::fail(ViolationKind kind, const EventInstance& event,
                                std::optional<Violation>* violation) {
  state_.status = CopyStatus::aborted;
  if (violation) *violation = Violation{spec_->name, state_.id, kind, event, state_.cut};
  switch (kind) {
    case ViolationKind::cold: return AdvanceResult::cold_violation;
    case ViolationKind::hot: return AdvanceResult::hot_violation;
    case ViolationKind::forbidden: return AdvanceResult::forbidden_violation;
  }
  return AdvanceResult::hot_violation;
}

bool ActiveChart::loop_continues(const Element& loop, std::int64_t iteration,
                                 const ChartContext& ctx) const {
  switch (loop.loop_kind) {
    case Element::LoopKind::count: return iteration < loop.count;
    case Element::LoopKind::while_expr: {
      std::map<std::string, Value> tentative;
      CopyScope scope(*spec_, state_.bindings, ctx, tentative);
      try {
        return evaluate_bool(loop.expr, scope);
      } catch (const Error&) {
        return false;
      }
    }
    case Element::LoopKind::each: {
      const Lifeline& l = spec_->lifelines[spec_->lifeline_index(loop.each)];
      auto cls = ctx.store->find_class(l.cls);
      return cls && iteration < static_cast<std::int64_t>(ctx.store->objects_of(*cls).size());
    }
  }
  return false;
}

void ActiveChart::start_iteration(const Element& loop, const ChartContext& ctx) {
  Frame& f = state_.frames.back();
  std::fill(f.passed.begin(), f.passed.end(), 0);
  if (loop.loop_kind == Element::LoopKind::each) {
    const Lifeline& l = spec_->lifelines[spec_->lifeline_index(loop.each)];
    auto objects = ctx.store->objects_of(*ctx.store->find_class(l.cls));
    bind(loop.each, Value(objects[f.iteration]));
  }
}

void ActiveChart::leave_loop() {
  for (const auto& name : state_.frames.back().locals) state_.bindings.erase(name);
  int element = state_.frames.back().element;
  state_.frames.pop_back();
  pass(segment(state_.frames.size() - 1).elements[element], element);
}

AdvanceResult ActiveChart::settle(const ChartContext& ctx, const EventInstance& cause,
                                  std::optional<Violation>* violation) {
  constexpr int kMaxSettleSteps = 100000;
  for (int steps = 0;; ++steps) {
    if (steps > kMaxSettleSteps) {
      throw Error(ErrorKind::run_error, "chart '" + spec_->name + "' loops without messages");
    }
    std::size_t depth = state_.frames.size() - 1;
    const Segment& seg = segment(depth);
    bool changed = false;
    for (std::size_t j = 0; j < seg.elements.size() && !changed; ++j) {
      if (!is_enabled(j)) continue;
      const Element& e = seg.elements[j];
      switch (e.kind) {
        case Element::Kind::message:
          break;
        case Element::Kind::sync:
          pass(e, static_cast<int>(j));
          changed = true;
          break;
        case Element::Kind::cond: {
          std::map<std::string, Value> tentative;
          CopyScope scope(*spec_, state_.bindings, ctx, tentative);
          bool holds = false;
          try {
            holds = evaluate_bool(e.expr, scope);
          } catch (const Error&) {
            holds = false;
          }
          if (holds) {
            for (auto& [k, v] : tentative) bind(k, v);
            pass(e, static_cast<int>(j));
          } else if (e.hot) {
            return fail(ViolationKind::hot, cause, violation);
          } else if (depth == 0) {
            return fail(ViolationKind::cold, cause, violation);
          } else {
            const Element& loop = segment(depth - 1).elements[state_.frames[depth].element];
            if (loop.loop_kind == Element::LoopKind::each) {
              // skip the rest of this instance's iteration
              auto& passed = state_.frames.back().passed;
              std::fill(passed.begin(), passed.end(), 1);
            } else {
              leave_loop();
            }
          }
          changed = true;
          break;
        }
        case Element::Kind::loop:
          if (loop_continues(e, 0, ctx)) {
            state_.frames.push_back(
                Frame{static_cast<int>(j), 0, std::vector<char>(e.body.elements.size(), 0), {}});
            start_iteration(e, ctx);
          } else {
            pass(e, static_cast<int>(j));
          }
          changed = true;
          break;
      }
    }
    if (changed) continue;

    const auto& passed = state_.frames.back().passed;
    if (!std::all_of(passed.begin(), passed.end(), [](char c) { return c != 0; })) {
      return AdvanceResult::progressed;
    }
    if (depth == 0) {
      state_.status = CopyStatus::completed;
      return AdvanceResult::completed;
    }
    Frame& f = state_.frames.back();
    for (const auto& name : f.locals) state_.bindings.erase(name);
    f.locals.clear();
    const Element& loop = segment(depth - 1).elements[f.element];
    if (loop_continues(loop, f.iteration + 1, ctx)) {
      ++f.iteration;
      start_iteration(loop, ctx);
    } else {
      leave_loop();
    }
  }
}

bool ActiveChart::in_scope(const Forbid& f, std::size_t depth) const {
  const Segment& seg = segment(depth);
  const auto& passed = state_.frames[depth].passed;
  for (std::size_t j = 0; j < seg.elements.size(); ++j) {
    const auto& label = seg.elements[j].label;
    if (label.empty()) continue;
    if (label == f.from_label && !passed[j]) return false;
    if (label == f.to_label && passed[j]) return false;
  }
  return true;
}

namespace {

// Every message not yet passed at or below `seg` (unentered loop bodies included).
void pending_messages(const Segment& seg, const std::vector<char>* passed, int skip,
                      std::vector<const Element*>& out) {
  for (std::size_t j = 0; j < seg.elements.size(); ++j) {
    if (passed && (*passed)[j]) continue;
    if (static_cast<int>(j) == skip) continue;
    const Element& e = seg.elements[j];
    if (e.kind == Element::Kind::message) out.push_back(&e);
    if (e.kind == Element::Kind::loop) pending_messages(e.body, nullptr, -1, out);
  }
}

}  // namespace

const Element* ActiveChart::pending_match(const EventInstance& event, const ChartContext& ctx) const {
  std::vector<const Element*> pending;
  for (std::size_t d = 0; d < state_.frames.size(); ++d) {
    int skip = d + 1 < state_.frames.size() ? state_.frames[d + 1].element : -1;
    pending_messages(segment(d), &state_.frames[d].passed, skip, pending);
  }
  for (const Element* e : pending) {
    if (unify(*spec_, *e, event, state_.bindings, ctx)) return e;
  }
  return nullptr;
}

Match ActiveChart::match(const EventInstance& event, const ChartContext& ctx) const {
  Match m;
  if (!running()) return m;
  for (std::size_t d = 0; d < state_.frames.size(); ++d) {
    for (const auto& f : segment(d).forbids) {
      if (!in_scope(f, d)) continue;
      const std::vector<Expr>* args = f.args ? &*f.args : nullptr;
      if (unify_pattern(*spec_, f.from, f.to, f.name, args, event, state_.bindings, ctx)) {
        m.result = AdvanceResult::forbidden_violation;
        return m;
      }
    }
  }
  const Segment& seg = segment(state_.frames.size() - 1);
  for (std::size_t j = 0; j < seg.elements.size(); ++j) {
    const Element& e = seg.elements[j];
    if (e.kind != Element::Kind::message || !is_enabled(j)) continue;
    if (auto b = unify(*spec_, e, event, state_.bindings, ctx)) {
      m.result = AdvanceResult::progressed;
      m.element = static_cast<int>(j);
      m.bindings = std::move(*b);
      return m;
    }
  }
  if (const Element* e = pending_match(event, ctx)) {
    m.result = e->hot ? AdvanceResult::hot_violation : AdvanceResult::cold_violation;
  }
  return m;
}

AdvanceResult ActiveChart::apply(const Match& m, const EventInstance& event,
                                 const ChartContext& ctx, std::optional<Violation>* violation) {
  if (!running()) return AdvanceResult::irrelevant;
  switch (m.result) {
    case AdvanceResult::irrelevant:
    case AdvanceResult::completed:
      return AdvanceResult::irrelevant;
    case AdvanceResult::cold_violation: return fail(ViolationKind::cold, event, violation);
    case AdvanceResult::hot_violation: return fail(ViolationKind::hot, event, violation);
    case AdvanceResult::forbidden_violation: return fail(ViolationKind::forbidden, event, violation);
    case AdvanceResult::progressed: break;
  }
  for (const auto& [k, v] : m.bindings) bind(k, v);
  pass(segment(state_.frames.size() - 1).elements[m.element], m.element);
  return settle(ctx, event, violation);
}

std::vector<EnabledMessage> ActiveChart::enabled_messages(const ChartContext& ctx) const {
  std::vector<EnabledMessage> out;
  if (!running()) return out;
  const Segment& seg = segment(state_.frames.size() - 1);
  for (std::size_t j = 0; j < seg.elements.size(); ++j) {
    const Element& e = seg.elements[j];
    if (e.kind != Element::Kind::message || !is_enabled(j)) continue;
    EnabledMessage em{&e, std::nullopt};
    std::map<std::string, Value> tentative;
    CopyScope scope(*spec_, state_.bindings, ctx, tentative);
    try {
      EventInstance ev;
      if (e.from != kEnvLifeline) {
        auto src = scope.lookup(e.from);
        if (!src) throw Error(ErrorKind::run_error, "unbound");
        ev.source = src->as_ref();
      }
      auto dst = scope.lookup(e.to);
      if (!dst) throw Error(ErrorKind::run_error, "unbound");
      ev.target = dst->as_ref();
      ev.name = e.name;
      for (const auto& a : e.args) ev.args.push_back(evaluate(a, scope));
      ev.origin = Origin::lsc(spec_->name, state_.id);
      em.event = std::move(ev);
    } catch (const Error&) {
      em.event.reset();
    }
    out.push_back(std::move(em));
  }
  return out;
}

bool ActiveChart::is_blocked(const EventInstance& event, const ChartContext& ctx) const {
  ActiveChart probe(*this);
  auto r = probe.advance(event, ctx);
  return r == AdvanceResult::hot_violation || r == AdvanceResult::forbidden_violation;
}

std::vector<const Element*> ActiveChart::obligations() const {
  std::vector<const Element*> out;
  if (!running()) return out;
  const Segment& seg = segment(state_.frames.size() - 1);
  for (std::size_t j = 0; j < seg.elements.size(); ++j) {
    const Element& e = seg.elements[j];
    if (e.kind == Element::Kind::message && !e.executed && e.hot && is_enabled(j)) out.push_back(&e);
  }
  return out;
}

std::vector<Activation> find_activations(const ChartSpec& spec, const EventInstance& event,
                                         const ChartContext& ctx,
                                         const std::vector<const ActiveChart*>& running) {
  std::vector<Activation> out;
  auto start = initial_bindings(spec);
  for (int j : minimal_elements(spec)) {
    const Element& e = spec.body.elements[j];
    if (e.kind != Element::Kind::message || e.executed) continue;
    auto b = unify(spec, e, event, start, ctx);
    if (!b) continue;
    bool duplicate = std::any_of(running.begin(), running.end(), [&](const ActiveChart* c) {
      return c->running() && c->spec().name == spec.name && c->state().activation == *b;
    });
    duplicate = duplicate || std::any_of(out.begin(), out.end(),
                                         [&](const Activation& a) { return a.bindings == *b; });
    if (!duplicate) out.push_back({j, std::move(*b)});
  }
  return out;
}

ActiveChart start_copy(std::shared_ptr<const ChartSpec> spec, const Activation& activation,
                       std::int64_t id, const EventInstance& event, const ChartContext& ctx,
                       std::optional<Violation>* violation) {
  CopyState state;
  state.id = id;
  state.activation = activation.bindings;
  ActiveChart copy(std::move(spec), std::move(state));
  for (const auto& [k, v] : activation.bindings) copy.bind(k, v);
  copy.pass(copy.spec().body.elements[activation.element], activation.element);
  copy.settle(ctx, event, violation);
  return copy;
}

std::vector<ActiveChart> try_activate(std::shared_ptr<const ChartSpec> spec,
                                      const EventInstance& event, const ChartContext& ctx,
                                      const std::vector<const ActiveChart*>& running,
                                      std::int64_t& next_id, std::vector<Violation>& violations) {
  std::vector<ActiveChart> out;
  for (const auto& a : find_activations(*spec, event, ctx, running)) {
    std::optional<Violation> v;
    ActiveChart copy = start_copy(spec, a, next_id++, event, ctx, &v);
    if (copy.running()) {
      out.push_back(std::move(copy));
    } else if (v) {
      violations.push_back(std::move(*v));
    }
  }
  return out;
}

}  // namespace rxm
