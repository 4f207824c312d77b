#include "rxm/statechart.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "rxm/error.hpp"

namespace rxm {

std::string timer_event_name(const Trigger& trigger) {
  return std::string(trigger.kind == Trigger::Kind::every ? "every(" : "after(") +
         std::to_string(trigger.duration_ms) + ")";
}

// ---------------------------------------------------------------------------
// Spec structure

namespace {

std::string join_path(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ".") + p;
  return out;
}

}  // namespace

int StatechartSpec::find_state(std::string_view path) const {
  if (path.empty()) return -1;
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i].path == path) return static_cast<int>(i);
  }
  int found = -1;
  std::string suffix = "." + std::string(path);
  for (std::size_t i = 1; i < states.size(); ++i) {
    const auto& p = states[i].path;
    if (p.size() > suffix.size() && p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (found >= 0) return -1;
      found = static_cast<int>(i);
    }
  }
  return found;
}

bool StatechartSpec::is_ancestor(int ancestor, int state) const {
  for (int s = states[state].parent; s >= 0; s = states[s].parent) {
    if (s == ancestor) return true;
  }
  return false;
}

void StatechartSpec::finalize() {
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& s = states[i];
    if (i == 0) {
      s.path.clear();
    } else {
      const auto& parent = states[s.parent];
      s.path = parent.path.empty() ? s.name : parent.path + "." + s.name;
    }
    if (s.kind == StateKind::choice || s.kind == StateKind::final_state) continue;
    s.kind = s.regions.empty()       ? StateKind::basic
             : s.regions.size() == 1 ? StateKind::compound
                                     : StateKind::orthogonal;
  }
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class MachineTypes : public TypeScope {
 public:
  MachineTypes(const StatechartSpec& spec, const ObjectStore& store, const ClassDef& owner,
               const std::vector<std::string>& params, const MachineSpecLookup& remote)
      : spec_(spec), store_(store), owner_(owner), params_(params), remote_(remote) {}

  std::optional<Type> name_type(std::string_view name) const override {
    if (std::find(params_.begin(), params_.end(), name) != params_.end()) return Type::any();
    for (const auto& v : spec_.variables) {
      if (v.name == name) return Type::of(v.kind, v.ref_class);
    }
    if (const auto* p = owner_.find_property(name)) return Type::of(p->kind, p->ref_class);
    if (name == "self") return Type::of(ValueKind::object_ref, owner_.name);
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
                                          const std::vector<std::string>& path) const override {
    const StatechartSpec* target = &spec_;
    if (!object.empty()) {
      if (!store_.contains(object)) return "active(): unknown object '" + std::string(object) + "'";
      target = remote_ ? remote_(object) : nullptr;
      if (!target) return std::nullopt;  // resolved at run time
    }
    if (target->find_state(join_path(path)) < 0) {
      return "active(): unknown state '" + join_path(path) + "'";
    }
    return std::nullopt;
  }

 private:
  const StatechartSpec& spec_;
  const ObjectStore& store_;
  const ClassDef& owner_;
  const std::vector<std::string>& params_;
  const MachineSpecLookup& remote_;
};

struct Validator {
  const StatechartSpec& spec;
  const ObjectStore& store;
  const ClassDef& owner;
  const MachineSpecLookup& remote;
  std::vector<Diagnostic> out;

  void error(SourceLoc loc, std::string msg) { out.push_back({loc, std::move(msg)}); }

  std::optional<int> receivable_arity(std::string_view event) const {
    if (auto a = owner.event_arity(event)) return a;
    for (const auto& e : spec.internal_events) {
      if (e.name == event) return e.arity;
    }
    return std::nullopt;
  }

  void check_actions(const std::vector<Action>& actions, const std::vector<std::string>& params) {
    MachineTypes types(spec, store, owner, params, remote);
    for (const auto& a : actions) {
      for (const auto& arg : a.args) check_expr(arg, types, out);
      switch (a.kind) {
        case Action::Kind::assign: {
          const auto& path = a.target.path;
          if (path.size() == 1) {
            if (std::find(params.begin(), params.end(), path[0]) != params.end()) {
              error(a.loc, "cannot assign to event parameter '" + path[0] + "'");
              break;
            }
            bool is_var = std::any_of(spec.variables.begin(), spec.variables.end(),
                                      [&](const VarDecl& v) { return v.name == path[0]; });
            if (!is_var && !owner.find_property(path[0])) {
              error(a.loc, "assignment to unknown variable or property '" + path[0] + "'");
              break;
            }
          }
          Type lhs = check_expr(a.target, types, out);
          Type rhs = check_expr(a.value, types, out);
          if (lhs.tag != Type::Tag::any && rhs.tag != Type::Tag::any && lhs.tag != rhs.tag &&
              !(lhs.tag == Type::Tag::ref && rhs.tag == Type::Tag::null)) {
            error(a.loc, "cannot assign to '" + a.target.dotted() + "': kind mismatch");
          }
          break;
        }
        case Action::Kind::raise: {
          auto arity = receivable_arity(a.event);
          if (!arity) {
            error(a.loc, "raise of undeclared event '" + a.event + "'");
          } else if (*arity != static_cast<int>(a.args.size())) {
            error(a.loc, "event '" + a.event + "' expects " + std::to_string(*arity) + " argument(s)");
          }
          break;
        }
        case Action::Kind::send: {
          Type t = check_expr(a.target, types, out);
          if (t.tag != Type::Tag::any && t.tag != Type::Tag::ref) {
            error(a.loc, "send target '" + a.target.dotted() + "' is not an object");
            break;
          }
          if (t.tag == Type::Tag::ref && !t.cls.empty()) {
            auto cls = store.find_class(t.cls);
            auto arity = cls ? store.class_def(*cls).event_arity(a.event) : std::nullopt;
            if (!arity) {
              error(a.loc, "class " + t.cls + " does not declare event '" + a.event + "'");
            } else if (*arity != static_cast<int>(a.args.size())) {
              error(a.loc, "event '" + a.event + "' expects " + std::to_string(*arity) +
                               " argument(s)");
            }
          }
          break;
        }
      }
    }
  }

  bool crosses_top_regions(int source, int target) const {
    auto top = [&](int s) {
      while (spec.states[s].parent > 0) s = spec.states[s].parent;
      return s;
    };
    int a = top(source);
    int b = top(target);
    if (a == b) return false;
    const auto& root = spec.states[0];
    auto region = [&](int s) {
      for (std::size_t r = 0; r < root.regions.size(); ++r) {
        const auto& st = root.regions[r].states;
        if (std::find(st.begin(), st.end(), s) != st.end()) return static_cast<int>(r);
      }
      return -1;
    };
    return region(a) != region(b);
  }

  void run() {
    std::set<std::string> seen;
    for (const auto& v : spec.variables) {
      if (!seen.insert(v.name).second) error(v.loc, "variable '" + v.name + "' declared twice");
      if (owner.find_property(v.name)) {
        error(v.loc, "variable '" + v.name + "' shadows a property of " + owner.name);
      }
      if (v.initial.kind() != v.kind ||
          (v.kind == ValueKind::object_ref && !v.initial.as_ref().is_null() &&
           !store.contains(v.initial.as_ref().id))) {
        error(v.loc, "initial value of '" + v.name + "' does not conform to its kind");
      }
    }
    for (const auto& e : spec.internal_events) {
      if (owner.event_arity(e.name)) {
        error(e.loc, "internal event '" + e.name + "' clashes with an event of " + owner.name);
      }
    }

    for (std::size_t i = 0; i < spec.states.size(); ++i) {
      const auto& s = spec.states[i];
      std::set<std::string> names;
      for (const auto& r : s.regions) {
        if (r.states.empty()) error(s.loc, "empty region in '" + s.path + "'");
        if (r.initial < 0 || r.initial >= static_cast<int>(r.states.size())) {
          error(s.loc, "region of '" + s.path + "' has no valid initial state");
        } else if (spec.states[r.states[r.initial]].kind == StateKind::final_state) {
          error(s.loc, "initial state of a region in '" + s.path + "' cannot be final");
        }
        for (int c : r.states) {
          if (!names.insert(spec.states[c].name).second) {
            error(spec.states[c].loc, "state '" + spec.states[c].path + "' declared twice");
          }
        }
      }
      if (s.kind == StateKind::final_state && !s.transitions.empty()) {
        error(s.loc, "final state '" + s.path + "' cannot have outgoing transitions");
      }
      check_actions(s.entry, {});
      check_actions(s.exit, {});

      int else_count = 0;
      for (const auto& t : s.transitions) {
        const auto& params = t.trigger.params;
        if (s.kind == StateKind::choice) {
          if (t.trigger.kind != Trigger::Kind::none) {
            error(t.loc, "choice '" + s.path + "' may only have triggerless transitions");
          }
          if (t.is_else) ++else_count;
          if (!t.is_else && !t.guard) error(t.loc, "choice branch needs a guard or 'else'");
          if (t.target < 0) error(t.loc, "choice branch needs a target");
        } else {
          switch (t.trigger.kind) {
            case Trigger::Kind::none:
              error(t.loc, "transition from '" + s.path + "' needs a trigger");
              break;
            case Trigger::Kind::event: {
              auto arity = receivable_arity(t.trigger.event);
              if (!arity) {
                error(t.loc, "trigger '" + t.trigger.event + "' is not an event of " + owner.name);
              } else if (*arity != static_cast<int>(params.size())) {
                error(t.loc, "trigger '" + t.trigger.event + "' binds " +
                                 std::to_string(params.size()) + " parameter(s), event has " +
                                 std::to_string(*arity));
              }
              break;
            }
            case Trigger::Kind::after:
              if (t.trigger.duration_ms < 0) error(t.loc, "negative timer duration");
              break;
            case Trigger::Kind::every:
              if (t.trigger.duration_ms <= 0) error(t.loc, "'every' needs a positive period");
              break;
          }
        }
        if (t.target == 0 || t.target >= static_cast<int>(spec.states.size())) {
          error(t.loc, "invalid transition target");
        } else if (t.target > 0 && crosses_top_regions(static_cast<int>(i), t.target)) {
          error(t.loc, "transition from '" + s.path + "' to '" + spec.states[t.target].path +
                           "' crosses top-level regions");
        }
        if (t.guard) {
          MachineTypes types(spec, store, owner, params, remote);
          Type g = check_expr(*t.guard, types, out);
          if (!g.is(Type::Tag::boolean)) error(t.loc, "guard is not boolean");
        }
        check_actions(t.actions, params);
      }
      if (s.kind == StateKind::choice) {
        if (s.transitions.empty()) error(s.loc, "choice '" + s.path + "' has no branches");
        if (else_count > 1) error(s.loc, "choice '" + s.path + "' has more than one else branch");
      }
    }
  }
};

}  // namespace

std::vector<Diagnostic> validate_statechart(const StatechartSpec& spec, const ObjectStore& store,
                                            const MachineSpecLookup& remote) {
  auto cls = store.find_class(spec.owner_class);
  if (!cls) return {{spec.loc, "statechart '" + spec.name + "': unknown class '" + spec.owner_class + "'"}};
  if (spec.states.empty() || spec.states[0].regions.empty()) {
    return {{spec.loc, "statechart '" + spec.name + "' has no states"}};
  }
  Validator v{spec, store, store.class_def(*cls), remote, {}};
  v.run();
  return std::move(v.out);
}

// ---------------------------------------------------------------------------
// Execution

struct Machine::Run : EvalScope {
  Machine& m;
  MachineContext& ctx;
  std::vector<std::pair<std::string, Value>> params;
  std::deque<EventInstance> internal;
  std::deque<int> pending_choices;
  std::vector<EventInstance> emitted;
  std::vector<std::string> log;

  Run(Machine& machine, MachineContext& c) : m(machine), ctx(c) {}

  std::optional<Value> lookup(std::string_view name) const override {
    for (const auto& [k, v] : params) {
      if (k == name) return v;
    }
    const auto& vars = m.spec_->variables;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i].name == name) return m.state_.variables[i];
    }
    const ClassDef& cls = ctx.store->class_of(m.owner_);
    if (cls.find_property(name)) return ctx.store->get(m.owner_, name);
    if (name == "self") return Value(m.owner_);
    if (ctx.store->contains(name)) return Value(ObjectRef{std::string(name)});
    return std::nullopt;
  }

  Value property(const ObjectRef& obj, std::string_view name) const override {
    return ctx.store->get(obj, name);
  }

  bool active(std::string_view object, const std::vector<std::string>& path) const override {
    if (object.empty() || object == m.owner_.id) return m.is_active(join_path(path));
    if (!ctx.remote_active) {
      throw Error(ErrorKind::run_error, "no machine registry for active(" + std::string(object) + "::...)");
    }
    return ctx.remote_active(object, path);
  }

  void assign(const Expr& target, Value value) {
    const auto& path = target.path;
    if (path.size() == 1) {
      const auto& vars = m.spec_->variables;
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].name == path[0]) {
          if (value.kind() != vars[i].kind) {
            throw Error(ErrorKind::kind_mismatch, "variable '" + path[0] + "' expects " +
                                                      std::string(to_string(vars[i].kind)));
          }
          m.state_.variables[i] = std::move(value);
          return;
        }
      }
      ctx.store->set(m.owner_, path[0], std::move(value));
      return;
    }
    Expr holder = Expr::make_name({path.begin(), path.end() - 1});
    ObjectRef obj = evaluate(holder, *this).as_ref();
    if (obj.is_null()) throw Error(ErrorKind::run_error, "assignment through null reference");
    ctx.store->set(obj, path.back(), std::move(value));
  }
};

Machine::Machine(std::shared_ptr<const StatechartSpec> spec, ObjectRef owner,
                 const ObjectStore& store)
    : spec_(std::move(spec)), owner_(std::move(owner)) {
  const ClassDef& cls = store.class_of(owner_);
  if (cls.name != spec_->owner_class) {
    throw Error(ErrorKind::class_mismatch, "statechart '" + spec_->name + "' is for class " +
                                               spec_->owner_class + ", object '" + owner_.id +
                                               "' is a " + cls.name);
  }
  state_.active.assign(spec_->states.size(), 0);
  state_.generation.assign(spec_->states.size(), 0);
  for (const auto& v : spec_->variables) state_.variables.push_back(v.initial);
}

int Machine::active_child(const Region& region) const {
  for (int s : region.states) {
    if (state_.active[s]) return s;
  }
  return -1;
}

bool Machine::is_active(std::string_view path) const {
  int s = spec_->find_state(path);
  if (s < 0) {
    throw Error(ErrorKind::unknown_state,
                "machine '" + owner_.id + "' has no state '" + std::string(path) + "'");
  }
  return state_.active[s] != 0;
}

std::vector<std::string> Machine::configuration() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < spec_->states.size(); ++i) {
    if (state_.active[i] && spec_->states[i].regions.empty()) out.push_back(spec_->states[i].path);
  }
  return out;
}

std::map<std::string, Value> Machine::variables() const {
  std::map<std::string, Value> out;
  for (std::size_t i = 0; i < spec_->variables.size(); ++i) {
    out.emplace(spec_->variables[i].name, state_.variables[i]);
  }
  return out;
}

bool Machine::configuration_valid() const {
  if (!state_.initialized) {
    return std::none_of(state_.active.begin(), state_.active.end(), [](char c) { return c; });
  }
  if (!state_.active[0]) return false;
  for (std::size_t i = 0; i < spec_->states.size(); ++i) {
    const auto& s = spec_->states[i];
    if (state_.active[i] && s.kind == StateKind::choice) return false;
    for (const auto& r : s.regions) {
      int n = 0;
      for (int c : r.states) n += state_.active[c] ? 1 : 0;
      if (state_.active[i] ? n != 1 : n != 0) return false;
    }
  }
  return true;
}

void Machine::restore(MachineState state) {
  if (state.active.size() != spec_->states.size() ||
      state.generation.size() != spec_->states.size() ||
      state.variables.size() != spec_->variables.size()) {
    throw Error(ErrorKind::invalid_argument, "machine state does not match spec '" + spec_->name + "'");
  }
  state_ = std::move(state);
}

void Machine::run_actions(const std::vector<Action>& actions, Run& run) {
  for (const auto& a : actions) {
    std::vector<Value> args;
    for (const auto& e : a.args) args.push_back(evaluate(e, run));
    switch (a.kind) {
      case Action::Kind::assign:
        run.assign(a.target, evaluate(a.value, run));
        run.log.push_back(a.target.dotted() + " := " + to_text(a.value));
        break;
      case Action::Kind::raise: {
        EventInstance ev{owner_, owner_, a.event, std::move(args), Origin::statechart(owner_.id), {}};
        run.internal.push_back(std::move(ev));
        run.log.push_back("raise " + a.event);
        break;
      }
      case Action::Kind::send: {
        ObjectRef target = evaluate(a.target, run).as_ref();
        if (target.is_null()) {
          throw Error(ErrorKind::run_error, "send of '" + a.event + "' to a null reference");
        }
        EventInstance ev{owner_, std::move(target), a.event, std::move(args),
                         Origin::statechart(owner_.id), {}};
        run.log.push_back("send " + ev.describe());
        run.emitted.push_back(std::move(ev));
        break;
      }
    }
  }
}

void Machine::activate(int s, Run& run) {
  state_.active[s] = 1;
  ++state_.generation[s];
  const auto& node = spec_->states[s];
  run_actions(node.entry, run);
  for (std::size_t t = 0; t < node.transitions.size(); ++t) {
    const auto& trig = node.transitions[t].trigger;
    if (!trig.is_timer()) continue;
    state_.timers.push_back({s, static_cast<int>(t), run.ctx.now + trig.duration_ms,
                             trig.kind == Trigger::Kind::every ? trig.duration_ms : 0,
                             state_.next_timer_seq++, state_.generation[s]});
  }
}

void Machine::exit_state(int s, Run& run) {
  if (!state_.active[s]) return;
  const auto& node = spec_->states[s];
  for (const auto& r : node.regions) {
    int c = active_child(r);
    if (c >= 0) exit_state(c, run);
  }
  run_actions(node.exit, run);
  std::erase_if(state_.timers, [s](const ArmedTimer& t) { return t.state == s; });
  state_.active[s] = 0;
}

void Machine::enter_default(const Region& region, Run& run) {
  enter_path({region.states[region.initial]}, 0, run);
}

void Machine::enter_path(const std::vector<int>& path, std::size_t i, Run& run) {
  int s = path[i];
  const auto& node = spec_->states[s];
  if (node.kind == StateKind::choice) {
    run.pending_choices.push_back(s);
    return;
  }
  activate(s, run);
  for (const auto& r : node.regions) {
    bool on_path = i + 1 < path.size() &&
                   std::find(r.states.begin(), r.states.end(), path[i + 1]) != r.states.end();
    if (on_path) {
      enter_path(path, i + 1, run);
    } else {
      enter_default(r, run);
    }
  }
}

int Machine::region_of(int ancestor, int s) const {
  while (spec_->states[s].parent != ancestor) s = spec_->states[s].parent;
  const auto& regions = spec_->states[ancestor].regions;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (std::find(regions[r].states.begin(), regions[r].states.end(), s) != regions[r].states.end()) {
      return static_cast<int>(r);
    }
  }
  return -1;
}

int Machine::transition_scope(int source, int target) const {
  int scope = spec_->states[source].parent;
  while (scope > 0 && !spec_->is_ancestor(scope, target)) scope = spec_->states[scope].parent;
  while (scope > 0 && region_of(scope, source) != region_of(scope, target)) {
    scope = spec_->states[scope].parent;
  }
  return scope;
}

void Machine::transition_to(int source, int target, const std::vector<Action>& actions, Run& run) {
  int scope = transition_scope(source, target);
  int exit_root = source;
  while (spec_->states[exit_root].parent != scope) exit_root = spec_->states[exit_root].parent;
  exit_state(exit_root, run);
  run_actions(actions, run);

  std::vector<int> path;
  for (int s = target; s != scope; s = spec_->states[s].parent) path.push_back(s);
  std::reverse(path.begin(), path.end());
  enter_path(path, 0, run);
  run.log.push_back(spec_->states[source].path + " -> " + spec_->states[target].path);
}

void Machine::resolve_choices(Run& run) {
  while (!run.pending_choices.empty()) {
    int c = run.pending_choices.front();
    run.pending_choices.pop_front();
    if (!state_.active[spec_->states[c].parent]) continue;
    const auto& node = spec_->states[c];
    const Transition* chosen = nullptr;
    for (const auto& t : node.transitions) {
      if (!t.is_else && t.guard && evaluate_bool(*t.guard, run)) {
        chosen = &t;
        break;
      }
    }
    if (!chosen) {
      for (const auto& t : node.transitions) {
        if (t.is_else) chosen = &t;
      }
    }
    if (!chosen) {
      throw Error(ErrorKind::run_error, "choice '" + node.path + "' in machine '" + owner_.id +
                                            "' has no enabled branch");
    }
    transition_to(c, chosen->target, chosen->actions, run);
  }
}

bool Machine::enabled(int s, int index, const EventInstance& ev, Run& run) {
  const auto& t = spec_->states[s].transitions[index];
  switch (t.trigger.kind) {
    case Trigger::Kind::none: return false;
    case Trigger::Kind::event:
      if (ev.timer || ev.name != t.trigger.event || ev.args.size() != t.trigger.params.size()) {
        return false;
      }
      break;
    case Trigger::Kind::after:
    case Trigger::Kind::every:
      if (!ev.timer || ev.timer->state != s || ev.timer->transition != index ||
          ev.timer->generation != state_.generation[s]) {
        return false;
      }
      break;
  }
  run.params.clear();
  for (std::size_t i = 0; i < t.trigger.params.size(); ++i) {
    run.params.emplace_back(t.trigger.params[i], ev.args[i]);
  }
  return !t.guard || evaluate_bool(*t.guard, run);
}

void Machine::fire(int s, int index, const EventInstance&, Run& run) {
  const auto& t = spec_->states[s].transitions[index];
  if (t.target < 0) {
    run_actions(t.actions, run);
    run.log.push_back(spec_->states[s].path + " (internal)");
  } else {
    transition_to(s, t.target, t.actions, run);
  }
  run.params.clear();
  resolve_choices(run);
}

bool Machine::react(int s, const EventInstance& ev, Run& run) {
  const auto& node = spec_->states[s];
  bool fired = false;
  for (const auto& r : node.regions) {
    if (!state_.active[s]) break;
    int c = active_child(r);
    if (c >= 0 && react(c, ev, run)) fired = true;
  }
  if (fired || !state_.active[s]) return fired;
  for (std::size_t t = 0; t < node.transitions.size(); ++t) {
    if (enabled(s, static_cast<int>(t), ev, run)) {
      fire(s, static_cast<int>(t), ev, run);
      return true;
    }
  }
  return false;
}

void Machine::finish(Run& run, StepResult& result) {
  int microsteps = 0;
  while (!run.internal.empty()) {
    if (++microsteps > max_microsteps_) {
      throw Error(ErrorKind::run_error, "machine '" + owner_.id + "' exceeded " +
                                            std::to_string(max_microsteps_) + " microsteps");
    }
    EventInstance ev = std::move(run.internal.front());
    run.internal.pop_front();
    if (react(0, ev, run)) result.consumed = true;
  }
  result.emitted = std::move(run.emitted);
  result.log = std::move(run.log);
  result.configuration = configuration();
}

StepResult Machine::initialize(MachineContext& ctx) {
  if (state_.initialized) {
    throw Error(ErrorKind::already_initialized, "machine '" + owner_.id + "' already initialized");
  }
  Run run(*this, ctx);
  state_.initialized = true;
  state_.active[0] = 1;
  for (const auto& r : spec_->states[0].regions) enter_default(r, run);
  resolve_choices(run);
  StepResult result;
  finish(run, result);
  return result;
}

StepResult Machine::dispatch(const EventInstance& event, MachineContext& ctx) {
  if (!state_.initialized) {
    throw Error(ErrorKind::not_initialized, "machine '" + owner_.id + "' is not initialized");
  }
  Run run(*this, ctx);
  run.internal.push_back(event);
  StepResult result;
  finish(run, result);
  return result;
}

std::optional<std::int64_t> Machine::next_due() const {
  std::optional<std::int64_t> best;
  for (const auto& t : state_.timers) {
    if (!best || t.due < *best) best = t.due;
  }
  return best;
}

std::vector<EventInstance> Machine::due_timers(std::int64_t now) {
  std::vector<EventInstance> out;
  if (!state_.initialized) return out;
  for (;;) {
    auto it = std::min_element(state_.timers.begin(), state_.timers.end(),
                               [](const ArmedTimer& a, const ArmedTimer& b) {
                                 return a.due != b.due ? a.due < b.due : a.seq < b.seq;
                               });
    if (it == state_.timers.end() || it->due > now) break;
    const auto& trig = spec_->states[it->state].transitions[it->transition].trigger;
    EventInstance ev{owner_, owner_, timer_event_name(trig), {}, Origin::timer(owner_.id),
                     TimerRef{it->state, it->transition, it->generation}};
    out.push_back(std::move(ev));
    if (it->period > 0) {
      it->due += it->period;
    } else {
      state_.timers.erase(it);
    }
  }
  return out;
}

}  // namespace rxm
