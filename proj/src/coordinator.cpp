#include "rxm/coordinator.hpp"

#include <algorithm>

#include "rxm/error.hpp"

namespace rxm {

Json to_json(const Value& value) {
  switch (value.kind()) {
    case ValueKind::integer: return value.as_int();
    case ValueKind::boolean: return value.as_bool();
    case ValueKind::string: return value.as_string();
    case ValueKind::object_ref:
      if (value.as_ref().is_null()) return nullptr;
      return Json{{"ref", value.as_ref().id}};
  }
  return nullptr;
}

Value value_from_json(const Json& j) {
  if (j.is_null()) return Value::null_ref();
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_string()) return Value(j.get<std::string>());
  if (j.is_object() && j.contains("ref") && j["ref"].is_string()) {
    return Value(ObjectRef{j["ref"].get<std::string>()});
  }
  throw Error(ErrorKind::invalid_argument, "not a value: " + j.dump());
}

Json to_json(const TraceEntry& entry) {
  Json args = Json::array();
  for (const auto& a : entry.event.args) args.push_back(to_json(a));
  Json violations = Json::array();
  for (const auto& v : entry.violations) {
    violations.push_back(Json{{"chart", v.chart}, {"copy", v.copy}, {"kind", to_string(v.kind)}});
  }
  return Json{{"seq", entry.seq},
              {"clock", entry.clock},
              {"origin", entry.event.origin.to_string()},
              {"src", entry.event.source_id()},
              {"dst", entry.event.target.id},
              {"event", entry.event.name},
              {"args", std::move(args)},
              {"violations", std::move(violations)},
              {"quiescent", entry.quiescent}};
}

std::string trace_line(const TraceEntry& entry) { return to_json(entry).dump(); }

bool RunReport::assertions_passed() const {
  return std::all_of(asserts.begin(), asserts.end(), [](const AssertOutcome& a) { return a.passed; });
}

std::size_t RunReport::violation_count() const {
  std::size_t n = 0;
  for (const auto& e : trace) n += e.violations.size();
  return n;
}

// ---------------------------------------------------------------------------

namespace {

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

}  // namespace

Coordinator::Coordinator(ObjectStore store, CoordinatorOptions options)
    : options_(options) {
  world_.store = std::move(store);
}

void Coordinator::register_machine(std::shared_ptr<const StatechartSpec> spec,
                                   const std::string& object) {
  if (started_) throw Error(ErrorKind::already_initialized, "cannot register after start");
  if (!world_.store.contains(object)) {
    throw Error(ErrorKind::unknown_object, "machine owner '" + object + "' does not exist");
  }
  if (world_.machine_index.count(object)) {
    throw Error(ErrorKind::duplicate_registration, "object '" + object + "' already has a machine");
  }
  world_.machines.emplace_back(std::move(spec), ObjectRef{object}, world_.store);
  world_.machine_index.emplace(object, world_.machines.size() - 1);
}

void Coordinator::register_chart(std::shared_ptr<const ChartSpec> spec) {
  if (started_) throw Error(ErrorKind::already_initialized, "cannot register after start");
  world_.playout.register_chart(std::move(spec));
}

const Machine* Coordinator::machine(std::string_view object) const {
  auto it = world_.machine_index.find(object);
  return it == world_.machine_index.end() ? nullptr : &world_.machines[it->second];
}

ChartContext Coordinator::chart_context(const World& w) {
  ChartContext ctx;
  ctx.store = &w.store;
  ctx.remote_active = [&w](std::string_view object, const std::vector<std::string>& path) {
    auto it = w.machine_index.find(object);
    if (it == w.machine_index.end()) {
      throw Error(ErrorKind::run_error, "object '" + std::string(object) + "' has no machine");
    }
    return w.machines[it->second].is_active(join_path(path));
  };
  return ctx;
}

MachineContext Coordinator::machine_context(World& w, std::int64_t now) {
  MachineContext ctx;
  ctx.store = &w.store;
  ctx.now = now;
  ctx.remote_active = chart_context(w).remote_active;
  return ctx;
}

bool Coordinator::timer_live(const World& w, const EventInstance& event) {
  auto it = w.machine_index.find(event.target.id);
  if (it == w.machine_index.end()) return false;
  const MachineState& s = w.machines[it->second].state();
  return s.active[event.timer->state] && s.generation[event.timer->state] == event.timer->generation;
}

TraceEntry Coordinator::deliver(World& w, const EventInstance& event, std::int64_t now,
                                std::size_t depth) {
  ChartContext cctx = chart_context(w);
  PendingObservation pending = w.playout.prepare(event, cctx);

  bool consumed = false;
  if (!event.timer) {
    if (const PropertyDecl* p = w.store.class_of(event.target).setter_target(event.name)) {
      w.store.set(event.target, p->name, event.args.at(0));
      consumed = true;
    }
  }
  if (auto it = w.machine_index.find(event.target.id); it != w.machine_index.end()) {
    MachineContext mctx = machine_context(w, now);
    StepResult r = w.machines[it->second].dispatch(event, mctx);
    consumed = consumed || r.consumed;
    for (auto& e : r.emitted) w.queue.push_back(std::move(e));
  }
  PlayoutUpdate update = w.playout.commit(pending, event, cctx);
  consumed = consumed || !update.activated.empty() || !update.advanced.empty();

  TraceEntry entry;
  entry.clock = now;
  entry.event = event;
  entry.violations = std::move(update.violations);
  entry.queue_depth = depth;
  entry.consumed = consumed;
  return entry;
}

std::optional<EventInstance> Coordinator::select_lsc() {
  for (auto& candidate : world_.playout.candidates(chart_context(world_))) {
    World probe = world_;
    try {
      if (deliver(probe, candidate, clock_, 0).violations.empty()) return std::move(candidate);
    } catch (const Error&) {
      // a candidate whose delivery cannot succeed is never selected
    }
  }
  return std::nullopt;
}

std::vector<EventInstance> Coordinator::lsc_candidates() {
  std::vector<EventInstance> out;
  for (auto& candidate : world_.playout.candidates(chart_context(world_))) {
    World probe = world_;
    try {
      if (deliver(probe, candidate, clock_, 0).violations.empty()) out.push_back(std::move(candidate));
    } catch (const Error&) {
    }
  }
  return out;
}

std::vector<TraceEntry> Coordinator::super_step(std::optional<EventInstance> first) {
  std::vector<TraceEntry> out;
  bool finished = false;
  auto record = [&](TraceEntry entry) {
    entry.seq = ++seq_;
    violation_count_ += entry.violations.size();
    bool stop = options_.strict && !entry.violations.empty();
    out.push_back(std::move(entry));
    if (stop) {
      halted_ = true;
      errors_.push_back("halted at seq " + std::to_string(seq_) + ": " +
                        out.back().event.describe() + " violates chart '" +
                        out.back().violations.front().chart + "'");
      world_.queue.clear();
    }
  };

  // A run error undoes the event that raised it; the step ends there.
  auto deliver_atomic = [&](const EventInstance& event, std::size_t depth) {
    World before = world_;
    try {
      return deliver(world_, event, clock_, depth);
    } catch (const Error&) {
      world_ = std::move(before);
      throw;
    }
  };

  try {
    std::int64_t steps = 0;
    if (first) {
      record(deliver_atomic(*first, world_.queue.size()));
      ++steps;
    }
    while (!halted_) {
      std::optional<EventInstance> next;
      std::size_t depth = world_.queue.size();
      if (!world_.queue.empty()) {
        next = std::move(world_.queue.front());
        world_.queue.pop_front();
        if (next->timer && !timer_live(world_, *next)) continue;
      } else {
        next = select_lsc();
        depth = 0;
      }
      if (!next) {
        finished = true;
        break;
      }
      if (steps >= options_.step_bound) {
        errors_.push_back("step bound of " + std::to_string(options_.step_bound) +
                          " events exceeded at clock " + std::to_string(clock_));
        world_.queue.clear();
        break;
      }
      record(deliver_atomic(*next, depth));
      ++steps;
    }
  } catch (const Error& e) {
    errors_.push_back(e.what());
    world_.queue.clear();
  }
  if (finished && !out.empty()) out.back().quiescent = true;
  return out;
}

std::vector<TraceEntry> Coordinator::start() {
  if (started_) throw Error(ErrorKind::already_initialized, "coordinator already started");
  started_ = true;
  for (auto& m : world_.machines) {
    MachineContext ctx = machine_context(world_, clock_);
    try {
      for (auto& e : m.initialize(ctx).emitted) world_.queue.push_back(std::move(e));
    } catch (const Error& e) {
      errors_.push_back(e.what());
    }
  }
  return super_step(std::nullopt);
}

void Coordinator::require_running() const {
  if (!started_) throw Error(ErrorKind::not_initialized, "coordinator not started");
  if (halted_) throw Error(ErrorKind::halted, "run halted by a violation in strict mode");
}

void Coordinator::check_injectable(const EventInstance& event) const {
  const auto& store = world_.store;
  if (event.source && !store.contains(event.source->id)) {
    throw Error(ErrorKind::unknown_object, "unknown source object '" + event.source->id + "'");
  }
  if (!store.contains(event.target.id)) {
    throw Error(ErrorKind::unknown_object, "unknown target object '" + event.target.id + "'");
  }
  const ClassDef& cls = store.class_of(event.target);
  auto arity = cls.event_arity(event.name);
  if (!arity) {
    throw Error(ErrorKind::unknown_event,
                "class " + cls.name + " does not declare event '" + event.name + "'");
  }
  if (static_cast<std::size_t>(*arity) != event.args.size()) {
    throw Error(ErrorKind::arity_mismatch, "event '" + event.name + "' expects " +
                                               std::to_string(*arity) + " argument(s), got " +
                                               std::to_string(event.args.size()));
  }
  if (const PropertyDecl* p = cls.setter_target(event.name)) store.check_value(*p, event.args[0]);
}

std::vector<TraceEntry> Coordinator::inject(EventInstance event) {
  require_running();
  check_injectable(event);
  event.origin = Origin::environment();
  event.timer.reset();
  return super_step(std::move(event));
}

std::vector<TraceEntry> Coordinator::tick(std::int64_t delta_ms) {
  require_running();
  if (delta_ms < 0) throw Error(ErrorKind::invalid_argument, "negative tick");
  std::vector<TraceEntry> out;
  const std::int64_t target = clock_ + delta_ms;
  while (!halted_) {
    std::optional<std::int64_t> next;
    for (const auto& m : world_.machines) {
      auto due = m.next_due();
      if (due && (!next || *due < *next)) next = due;
    }
    if (!next || *next > target) break;
    clock_ = std::max(clock_, *next);
    for (auto& m : world_.machines) {
      for (auto& e : m.due_timers(clock_)) world_.queue.push_back(std::move(e));
    }
    auto entries = super_step(std::nullopt);
    out.insert(out.end(), std::make_move_iterator(entries.begin()),
               std::make_move_iterator(entries.end()));
  }
  if (!halted_) clock_ = target;
  return out;
}

std::vector<AssertOutcome> Coordinator::check(const ScriptStep& step) const {
  AssertOutcome out{step.text(), false, {}};
  try {
    switch (step.kind) {
      case ScriptStep::Kind::assert_property: {
        Value actual = world_.store.get(ObjectRef{step.target}, step.name);
        out.passed = (actual == step.expected) != step.negated;
        out.detail = "actual " + actual.to_literal();
        break;
      }
      case ScriptStep::Kind::assert_state: {
        const Machine* m = machine(step.target);
        if (!m) throw Error(ErrorKind::unknown_object, "'" + step.target + "' has no machine");
        out.passed = m->is_active(step.name);
        std::string config;
        for (const auto& s : m->configuration()) config += (config.empty() ? "" : ", ") + s;
        out.detail = "configuration {" + config + "}";
        break;
      }
      case ScriptStep::Kind::assert_clock:
        out.passed = clock_ == step.number;
        out.detail = "clock " + std::to_string(clock_);
        break;
      case ScriptStep::Kind::assert_violations:
        out.passed = static_cast<std::int64_t>(violation_count_) == step.number;
        out.detail = std::to_string(violation_count_) + " violation(s)";
        break;
      case ScriptStep::Kind::assert_obligations: {
        auto n = world_.playout.obligations().size();
        out.passed = static_cast<std::int64_t>(n) == step.number;
        out.detail = std::to_string(n) + " obligation(s)";
        break;
      }
      case ScriptStep::Kind::inject:
      case ScriptStep::Kind::tick:
        break;
    }
  } catch (const Error& e) {
    out.passed = false;
    out.detail = e.what();
  }
  return {out};
}

RunReport Coordinator::run_script(const Script& script) {
  RunReport report;
  std::size_t errors_before = errors_.size();
  for (const auto& step : script) {
    if (halted_) break;
    try {
      switch (step.kind) {
        case ScriptStep::Kind::inject: {
          EventInstance ev;
          if (step.source) ev.source = ObjectRef{*step.source};
          ev.target = ObjectRef{step.target};
          ev.name = step.name;
          ev.args = step.args;
          auto entries = inject(std::move(ev));
          report.trace.insert(report.trace.end(), entries.begin(), entries.end());
          break;
        }
        case ScriptStep::Kind::tick: {
          auto entries = tick(step.number);
          report.trace.insert(report.trace.end(), entries.begin(), entries.end());
          break;
        }
        default: {
          auto outcomes = check(step);
          report.asserts.insert(report.asserts.end(), outcomes.begin(), outcomes.end());
          break;
        }
      }
    } catch (const Error& e) {
      errors_.push_back(step.text() + ": " + e.what());
    }
  }
  report.errors.assign(errors_.begin() + static_cast<std::ptrdiff_t>(errors_before), errors_.end());
  return report;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

std::string_view to_string(CopyStatus s) {
  switch (s) {
    case CopyStatus::running: return "running";
    case CopyStatus::completed: return "completed";
    case CopyStatus::aborted: return "aborted";
  }
  return "running";
}

CopyStatus parse_status(const std::string& s) {
  if (s == "completed") return CopyStatus::completed;
  if (s == "aborted") return CopyStatus::aborted;
  return CopyStatus::running;
}

ViolationKind parse_violation_kind(const std::string& s) {
  if (s == "cold") return ViolationKind::cold;
  if (s == "forbidden") return ViolationKind::forbidden;
  return ViolationKind::hot;
}

Json bindings_json(const std::map<std::string, Value>& bindings) {
  Json out = Json::object();
  for (const auto& [k, v] : bindings) out[k] = to_json(v);
  return out;
}

std::map<std::string, Value> bindings_from(const Json& j) {
  std::map<std::string, Value> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), value_from_json(it.value()));
  return out;
}

Json event_json(const EventInstance& e) {
  Json args = Json::array();
  for (const auto& a : e.args) args.push_back(to_json(a));
  return Json{{"src", e.source_id()}, {"dst", e.target.id}, {"event", e.name}, {"args", args}};
}

EventInstance event_from(const Json& j) {
  EventInstance e;
  if (j.at("src") != "env") e.source = ObjectRef{j.at("src").get<std::string>()};
  e.target = ObjectRef{j.at("dst").get<std::string>()};
  e.name = j.at("event").get<std::string>();
  for (const auto& a : j.at("args")) e.args.push_back(value_from_json(a));
  return e;
}

Json events_json(const ClassDef& c, const std::vector<EventDecl>& events) {
  Json out = Json::array();
  for (const auto& e : events) out.push_back(Json{{"name", e.name}, {"arity", e.arity}});
  (void)c;
  return out;
}

}  // namespace

Json Coordinator::snapshot() const {
  Json classes = Json::array();
  for (const auto& c : world_.store.classes()) {
    Json props = Json::array();
    for (const auto& p : c.properties) {
      Json pj{{"name", p.name}, {"kind", to_string(p.kind)}};
      if (!p.ref_class.empty()) pj["class"] = p.ref_class;
      props.push_back(std::move(pj));
    }
    classes.push_back(Json{{"name", c.name},
                           {"properties", std::move(props)},
                           {"signals", events_json(c, c.signals)},
                           {"methods", events_json(c, c.methods)}});
  }

  Json objects = Json::array();
  for (const auto& o : world_.store.objects()) {
    const ClassDef& c = world_.store.class_def(o.cls);
    Json values = Json::object();
    for (std::size_t i = 0; i < c.properties.size(); ++i) values[c.properties[i].name] = to_json(o.values[i]);
    objects.push_back(Json{{"id", o.id}, {"class", c.name}, {"values", std::move(values)}});
  }

  Json machines = Json::array();
  for (const auto& m : world_.machines) {
    const MachineState& s = m.state();
    Json active = Json::array();
    for (std::size_t i = 1; i < s.active.size(); ++i) {
      if (s.active[i]) active.push_back(m.spec().states[i].path);
    }
    Json vars = Json::object();
    for (const auto& [k, v] : m.variables()) vars[k] = to_json(v);
    Json timers = Json::array();
    for (const auto& t : s.timers) {
      timers.push_back(Json{{"state", m.spec().states[t.state].path},
                            {"transition", t.transition},
                            {"due", t.due},
                            {"period", t.period},
                            {"seq", t.seq},
                            {"generation", t.generation}});
    }
    machines.push_back(Json{{"id", m.id()},
                            {"statechart", m.spec().name},
                            {"configuration", m.configuration()},
                            {"active", std::move(active)},
                            {"variables", std::move(vars)},
                            {"timers", std::move(timers)},
                            {"generation", s.generation},
                            {"next_timer_seq", s.next_timer_seq},
                            {"initialized", s.initialized}});
  }

  Json copies = Json::array();
  for (const auto& c : world_.playout.copies()) {
    const CopyState& s = c.state();
    Json cut = Json::object();
    for (std::size_t i = 0; i < c.spec().lifelines.size(); ++i) cut[c.spec().lifelines[i].name] = s.cut[i];
    Json frames = Json::array();
    for (const auto& f : s.frames) {
      std::vector<int> passed(f.passed.begin(), f.passed.end());
      frames.push_back(Json{{"element", f.element},
                            {"iteration", f.iteration},
                            {"passed", passed},
                            {"locals", f.locals}});
    }
    Json enabled = Json::array();
    for (const auto& em : c.enabled_messages(chart_context(world_))) {
      enabled.push_back(em.message->from + "->" + em.message->to + ":" + em.message->name);
    }
    copies.push_back(Json{{"chart", c.spec().name},
                          {"copy", s.id},
                          {"status", to_string(s.status)},
                          {"cut", std::move(cut)},
                          {"bindings", bindings_json(s.bindings)},
                          {"activation", bindings_json(s.activation)},
                          {"frames", std::move(frames)},
                          {"enabled", std::move(enabled)}});
  }

  Json obligations = Json::array();
  for (const auto& o : world_.playout.obligations()) {
    obligations.push_back(Json{{"chart", o.chart},
                               {"copy", o.copy},
                               {"message", o.message->from + "->" + o.message->to + ":" +
                                               o.message->name}});
  }

  Json log = Json::array();
  for (const auto& v : world_.playout.log()) {
    log.push_back(Json{{"chart", v.chart},
                       {"copy", v.copy},
                       {"kind", to_string(v.kind)},
                       {"event", event_json(v.event)},
                       {"cut", v.cut}});
  }

  return Json{{"clock", clock_},
              {"seq", seq_},
              {"halted", halted_},
              {"violation_count", violation_count_},
              {"classes", std::move(classes)},
              {"objects", std::move(objects)},
              {"machines", std::move(machines)},
              {"copies", std::move(copies)},
              {"next_copy", world_.playout.next_copy_id()},
              {"obligations", std::move(obligations)},
              {"violations", std::move(log)}};
}

void Coordinator::restore(const Json& snap) {
  try {
    World w = world_;
    const Json& objects = snap.at("objects");
    const Json& machines = snap.at("machines");
    bool same_objects = objects.size() == w.store.objects().size();
    for (std::size_t i = 0; same_objects && i < objects.size(); ++i) {
      same_objects = objects[i].at("id") == w.store.objects()[i].id;
    }
    if (!same_objects || machines.size() != w.machines.size()) {
      throw Error(ErrorKind::invalid_argument, "snapshot was taken from a different model");
    }
    for (const auto& o : objects) {
      ObjectRef ref{o.at("id").get<std::string>()};
      for (auto it = o.at("values").begin(); it != o.at("values").end(); ++it) {
        w.store.set(ref, it.key(), value_from_json(it.value()));
      }
    }
    for (const auto& mj : machines) {
      auto idx = w.machine_index.find(mj.at("id").get<std::string>());
      if (idx == w.machine_index.end()) {
        throw Error(ErrorKind::invalid_argument, "snapshot names unknown machine " + mj.at("id").dump());
      }
      Machine& m = w.machines[idx->second];
      const StatechartSpec& spec = m.spec();
      MachineState s;
      s.initialized = mj.at("initialized").get<bool>();
      s.active.assign(spec.states.size(), 0);
      s.active[0] = s.initialized ? 1 : 0;
      for (const auto& p : mj.at("active")) {
        int i = spec.find_state(p.get<std::string>());
        if (i < 0) throw Error(ErrorKind::unknown_state, "snapshot state " + p.dump());
        s.active[i] = 1;
      }
      for (const auto& v : spec.variables) s.variables.push_back(value_from_json(mj.at("variables").at(v.name)));
      for (const auto& t : mj.at("timers")) {
        int state = spec.find_state(t.at("state").get<std::string>());
        if (state < 0) throw Error(ErrorKind::unknown_state, "snapshot timer state " + t.at("state").dump());
        s.timers.push_back(ArmedTimer{state, t.at("transition").get<int>(), t.at("due").get<std::int64_t>(),
                                      t.at("period").get<std::int64_t>(), t.at("seq").get<std::uint64_t>(),
                                      t.at("generation").get<std::uint64_t>()});
      }
      s.generation = mj.at("generation").get<std::vector<std::uint64_t>>();
      s.next_timer_seq = mj.at("next_timer_seq").get<std::uint64_t>();
      m.restore(std::move(s));
    }

    std::vector<std::pair<std::string, CopyState>> copies;
    for (const auto& cj : snap.at("copies")) {
      const std::string chart = cj.at("chart").get<std::string>();
      const ChartSpec* spec = w.playout.find_spec(chart);
      if (!spec) throw Error(ErrorKind::invalid_argument, "snapshot names unknown chart '" + chart + "'");
      CopyState s;
      s.id = cj.at("copy").get<std::int64_t>();
      s.status = parse_status(cj.at("status").get<std::string>());
      for (const auto& l : spec->lifelines) s.cut.push_back(cj.at("cut").at(l.name).get<std::int64_t>());
      s.bindings = bindings_from(cj.at("bindings"));
      s.activation = bindings_from(cj.at("activation"));
      for (const auto& fj : cj.at("frames")) {
        Frame f;
        f.element = fj.at("element").get<int>();
        f.iteration = fj.at("iteration").get<std::int64_t>();
        for (int p : fj.at("passed").get<std::vector<int>>()) f.passed.push_back(static_cast<char>(p));
        f.locals = fj.at("locals").get<std::vector<std::string>>();
        s.frames.push_back(std::move(f));
      }
      copies.emplace_back(chart, std::move(s));
    }
    std::vector<Violation> log;
    for (const auto& vj : snap.at("violations")) {
      log.push_back(Violation{vj.at("chart").get<std::string>(), vj.at("copy").get<std::int64_t>(),
                              parse_violation_kind(vj.at("kind").get<std::string>()),
                              event_from(vj.at("event")),
                              vj.at("cut").get<std::vector<std::int64_t>>()});
    }
    w.playout.restore(std::move(copies), snap.at("next_copy").get<std::int64_t>(), std::move(log));
    w.queue.clear();

    world_ = std::move(w);
    clock_ = snap.at("clock").get<std::int64_t>();
    seq_ = snap.at("seq").get<std::int64_t>();
    halted_ = snap.at("halted").get<bool>();
    violation_count_ = snap.at("violation_count").get<std::size_t>();
    started_ = true;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_argument, std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace rxm
