#include <sstream>

#include "rxm/model_text.hpp"

namespace rxm {

namespace {

class Writer {
 public:
  void line(int depth, const std::string& text) {
    out_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << text << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string kind_text(ValueKind kind, const std::string& ref_class) {
  std::string out(to_string(kind));
  if (kind == ValueKind::object_ref && !ref_class.empty()) out += " " + ref_class;
  return out;
}

std::string duration_text(std::int64_t ms) {
  if (ms > 0 && ms % 1000 == 0) return std::to_string(ms / 1000) + "s";
  return std::to_string(ms) + "ms";
}

std::string join_exprs(const std::vector<Expr>& exprs) {
  std::string out;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    if (i) out += ", ";
    out += to_text(exprs[i]);
  }
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

std::string call_suffix(const std::vector<Expr>& args) {
  return args.empty() ? std::string() : "(" + join_exprs(args) + ")";
}

std::string action_text(const Action& a) {
  switch (a.kind) {
    case Action::Kind::assign:
      return a.target.dotted() + " := " + to_text(a.value);
    case Action::Kind::raise:
      return "raise " + a.event + call_suffix(a.args);
    case Action::Kind::send:
      return "send " + a.target.dotted() + "." + a.event + call_suffix(a.args);
  }
  return {};
}

std::string actions_text(const std::vector<Action>& actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += "; ";
    out += action_text(actions[i]);
  }
  return out;
}

void write_regions(Writer& w, int depth, const StatechartSpec& sc, const std::vector<Region>& regions);

void write_state(Writer& w, int depth, const StatechartSpec& sc, int index, bool initial) {
  const StateNode& s = sc.states[index];
  std::string head = initial ? "initial " : "";
  auto target_text = [&](const Transition& t) {
    return t.target < 0 ? std::string() : " -> " + sc.states[t.target].path;
  };
  auto actions_suffix = [](const Transition& t) {
    return t.actions.empty() ? std::string() : " / " + actions_text(t.actions);
  };

  if (s.kind == StateKind::final_state) {
    w.line(depth, head + "final " + s.name);
    return;
  }
  if (s.kind == StateKind::choice) {
    w.line(depth, head + "choice " + s.name + " {");
    for (const auto& t : s.transitions) {
      std::string branch = t.is_else ? "else" : "[" + (t.guard ? to_text(*t.guard) : "true") + "]";
      w.line(depth + 1, branch + target_text(t) + actions_suffix(t));
    }
    w.line(depth, "}");
    return;
  }

  bool empty = s.entry.empty() && s.exit.empty() && s.transitions.empty() && s.regions.empty();
  if (empty) {
    w.line(depth, head + "state " + s.name);
    return;
  }
  w.line(depth, head + "state " + s.name + " {");
  if (!s.entry.empty()) w.line(depth + 1, "entry / " + actions_text(s.entry));
  if (!s.exit.empty()) w.line(depth + 1, "exit / " + actions_text(s.exit));
  for (const auto& t : s.transitions) {
    std::string trigger;
    switch (t.trigger.kind) {
      case Trigger::Kind::event:
        trigger = "on " + t.trigger.event;
        if (!t.trigger.params.empty()) trigger += "(" + join_names(t.trigger.params) + ")";
        break;
      case Trigger::Kind::after:
        trigger = "after " + duration_text(t.trigger.duration_ms);
        break;
      case Trigger::Kind::every:
        trigger = "every " + duration_text(t.trigger.duration_ms);
        break;
      case Trigger::Kind::none:
        break;
    }
    if (t.guard) trigger += " [" + to_text(*t.guard) + "]";
    w.line(depth + 1, trigger + target_text(t) + actions_suffix(t));
  }
  write_regions(w, depth + 1, sc, s.regions);
  w.line(depth, "}");
}

void write_region_states(Writer& w, int depth, const StatechartSpec& sc, const Region& r) {
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    bool initial = static_cast<int>(i) == r.initial &&
                   sc.states[r.states[i]].kind != StateKind::final_state;
    write_state(w, depth, sc, r.states[i], initial);
  }
}

void write_regions(Writer& w, int depth, const StatechartSpec& sc, const std::vector<Region>& regions) {
  if (regions.size() == 1) {
    write_region_states(w, depth, sc, regions[0]);
    return;
  }
  for (const auto& r : regions) {
    w.line(depth, "region {");
    write_region_states(w, depth + 1, sc, r);
    w.line(depth, "}");
  }
}

std::string message_text(const std::string& from, const std::string& to, const std::string& name) {
  return from + " -> " + to + " : " + name;
}

void write_segment(Writer& w, int depth, const Segment& seg) {
  for (const auto& e : seg.elements) {
    std::string head = e.label.empty() ? "" : "@" + e.label + " ";
    switch (e.kind) {
      case Element::Kind::message:
        w.line(depth, head + message_text(e.from, e.to, e.name) + call_suffix(e.args) +
                          (e.executed ? " exec" : " mon") + (e.hot ? " hot" : " cold"));
        break;
      case Element::Kind::sync:
        w.line(depth, head + "sync(" + join_names(e.lifelines) + ")");
        break;
      case Element::Kind::cond: {
        std::string text = head + "cond " + (e.hot ? "hot" : "cold") + " (" + to_text(e.expr) + ")";
        if (!e.lifelines.empty()) text += " on (" + join_names(e.lifelines) + ")";
        w.line(depth, text);
        break;
      }
      case Element::Kind::loop: {
        std::string text = head + "loop ";
        switch (e.loop_kind) {
          case Element::LoopKind::count: text += std::to_string(e.count); break;
          case Element::LoopKind::while_expr: text += "while (" + to_text(e.expr) + ")"; break;
          case Element::LoopKind::each: text += "each " + e.each; break;
        }
        w.line(depth, text + " {");
        write_segment(w, depth + 1, e.body);
        w.line(depth, "}");
        break;
      }
    }
  }
  for (const auto& f : seg.forbids) {
    std::string text = "forbid " + message_text(f.from, f.to, f.name);
    if (f.args) text += "(" + join_exprs(*f.args) + ")";
    if (!f.from_label.empty()) text += " from " + f.from_label;
    if (!f.to_label.empty()) text += " to " + f.to_label;
    w.line(depth, text);
  }
}

}  // namespace

std::string serialize_model(const ModelBundle& bundle) {
  Writer w;
  bool first = true;
  auto separate = [&] {
    if (!first) w.line(0, "");
    first = false;
  };

  for (const auto& c : bundle.classes) {
    separate();
    w.line(0, "class " + c.name + " {");
    for (const auto& p : c.properties) {
      w.line(1, "property " + p.name + ": " + kind_text(p.kind, p.ref_class) + " = " +
                    p.default_value.to_literal());
    }
    for (const auto& s : c.signals) w.line(1, "signal " + s.name + "/" + std::to_string(s.arity));
    for (const auto& m : c.methods) w.line(1, "method " + m.name + "/" + std::to_string(m.arity));
    w.line(0, "}");
  }
  for (const auto& o : bundle.objects) {
    separate();
    if (o.values.empty()) {
      w.line(0, "object " + o.id + " : " + o.cls);
      continue;
    }
    w.line(0, "object " + o.id + " : " + o.cls + " {");
    for (const auto& [name, value] : o.values) w.line(1, name + " = " + value.to_literal());
    w.line(0, "}");
  }
  for (const auto& sc : bundle.statecharts) {
    separate();
    w.line(0, "statechart " + sc.name + " for " + sc.owner_class + " {");
    for (const auto& v : sc.variables) {
      w.line(1, "var " + v.name + ": " + kind_text(v.kind, v.ref_class) + " = " + v.initial.to_literal());
    }
    for (const auto& e : sc.internal_events) {
      w.line(1, "event " + e.name + "/" + std::to_string(e.arity));
    }
    if (!sc.states.empty()) write_regions(w, 1, sc, sc.states[0].regions);
    w.line(0, "}");
  }
  for (const auto& chart : bundle.charts) {
    separate();
    w.line(0, "chart " + chart.name + " {");
    for (const auto& l : chart.lifelines) {
      std::string text = "lifeline " + l.name + ": " + l.cls;
      switch (l.binding) {
        case Lifeline::Binding::concrete: text += " = " + l.object; break;
        case Lifeline::Binding::symbolic:
          if (l.predicate) text += " where (" + to_text(*l.predicate) + ")";
          break;
        case Lifeline::Binding::all: text += " all"; break;
      }
      w.line(1, text);
    }
    for (const auto& v : chart.variables) {
      w.line(1, "var " + v.name + ": " + kind_text(v.kind, v.ref_class));
    }
    write_segment(w, 1, chart.body);
    w.line(0, "}");
  }
  return w.str();
}

std::string ScriptStep::text() const {
  auto literals = [](const std::vector<Value>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ", ";
      out += values[i].to_literal();
    }
    return out;
  };
  switch (kind) {
    case Kind::inject: {
      std::string out = "inject " + source.value_or("env") + " " + target + "." + name;
      if (!args.empty()) out += "(" + literals(args) + ")";
      return out;
    }
    case Kind::tick: return "tick " + std::to_string(number);
    case Kind::assert_property:
      return "assert " + target + "." + name + (negated ? " != " : " == ") + expected.to_literal();
    case Kind::assert_state: return "assert " + target + " in " + name;
    case Kind::assert_clock: return "assert clock == " + std::to_string(number);
    case Kind::assert_violations: return "assert violations == " + std::to_string(number);
    case Kind::assert_obligations: return "assert obligations == " + std::to_string(number);
  }
  return {};
}

std::string serialize_script(const Script& script) {
  std::string out;
  for (const auto& step : script) out += step.text() + "\n";
  return out;
}

}  // namespace rxm
