#include "parser.hpp"

#include <charconv>
#include <limits>

namespace rxm {

namespace {

const std::set<std::string_view, std::less<>> kReserved = {
    "class",  "property", "signal", "method", "object", "statechart", "for",    "chart",
    "var",    "event",    "state",  "initial", "choice", "final",     "region", "entry",
    "exit",   "on",       "after",  "every",  "raise",  "send",       "else",   "lifeline",
    "where",  "all",      "sync",   "cond",   "loop",   "while",      "each",   "forbid",
    "from",   "to",       "start",  "end",    "true",   "false",      "null",   "active",
    "exec",   "mon",      "hot",    "cold",   "self",   "env",        "int",    "string",
    "bool",   "ref"};

// Property and variable names may reuse structural keywords such as `state`;
// only words that would change the meaning of an expression or action are out.
const std::set<std::string_view, std::less<>> kValueWords = {"true", "false", "null", "active",
                                                             "self",  "env",   "raise", "send"};

constexpr std::size_t kMaxDiagnostics = 200;

}  // namespace

bool is_reserved(std::string_view word) { return kReserved.count(word) != 0; }

Parser::Parser(std::string_view text, int file) : tokens_(tokenize(text)), file_(file) {}

const Token& Parser::peek(std::size_t k) const {
  std::size_t i = std::min(pos_ + k, tokens_.size() - 1);
  return tokens_[i];
}

bool Parser::is_punct(std::string_view p, std::size_t k) const {
  const Token& t = peek(k);
  return t.kind == Token::Kind::punct && t.text == p;
}

bool Parser::is_word(std::string_view w, std::size_t k) const {
  const Token& t = peek(k);
  return t.kind == Token::Kind::ident && t.text == w;
}

bool Parser::accept_punct(std::string_view p) {
  if (!is_punct(p)) return false;
  ++pos_;
  return true;
}

bool Parser::accept_word(std::string_view w) {
  if (!is_word(w)) return false;
  ++pos_;
  return true;
}

Token Parser::take() {
  Token t = peek();
  if (pos_ < tokens_.size() - 1) ++pos_;
  return t;
}

void Parser::fail(const Token& at, const std::string& message) {
  if (diags_.size() < kMaxDiagnostics) {
    std::string msg = message;
    if (at.kind == Token::Kind::invalid) {
      msg = at.text;
    } else if (at.kind == Token::Kind::end) {
      msg += " (reached end of input)";
    } else {
      msg += ", found '" + (at.kind == Token::Kind::string ? "\"" + at.text + "\"" : at.text) + "'";
    }
    diags_.push_back({loc_of(at), std::move(msg)});
  }
  throw Failure{};
}

void Parser::expect_punct(std::string_view p, std::string_view context) {
  if (!accept_punct(p)) fail_here("expected '" + std::string(p) + "' " + std::string(context));
}

void Parser::expect_word(std::string_view w, std::string_view context) {
  if (!accept_word(w)) fail_here("expected '" + std::string(w) + "' " + std::string(context));
}

std::string Parser::expect_any_ident(std::string_view what) {
  if (peek().kind != Token::Kind::ident) fail_here("expected " + std::string(what));
  return take().text;
}

std::string Parser::expect_name(std::string_view what) {
  if (peek().kind != Token::Kind::ident) fail_here("expected " + std::string(what));
  if (is_reserved(peek().text)) {
    fail_here("'" + peek().text + "' is a keyword and cannot be used as " + std::string(what));
  }
  return take().text;
}

std::string Parser::expect_member_name(std::string_view what) {
  if (peek().kind != Token::Kind::ident) fail_here("expected " + std::string(what));
  if (kValueWords.count(peek().text)) {
    fail_here("'" + peek().text + "' is a keyword and cannot be used as " + std::string(what));
  }
  return take().text;
}

std::int64_t Parser::expect_int(std::string_view what) {
  if (peek().kind != Token::Kind::integer) fail_here("expected " + std::string(what));
  const Token& t = peek();
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail_here("integer out of range");
  take();
  return v;
}

std::int64_t Parser::expect_duration() {
  std::int64_t n = expect_int("a duration");
  if (accept_word("ms")) return n;
  if (is_word("s")) {
    if (n > std::numeric_limits<std::int64_t>::max() / 1000) fail_here("duration out of range");
    take();
    return n * 1000;
  }
  return n;
}

void Parser::recover(std::size_t start, const std::function<bool()>& stop) {
  if (pos_ == start && !at_end() && !is_punct("}")) take();
  int depth = 0;
  while (!at_end()) {
    if (depth == 0 && (is_punct("}") || stop())) return;
    if (is_punct("{")) ++depth;
    if (is_punct("}")) --depth;
    take();
  }
}

template <typename F>
void Parser::block(std::string_view context, const std::function<bool()>& member_start,
                   F&& member) {
  expect_punct("{", context);
  while (!is_punct("}") && !at_end()) {
    std::size_t start = pos_;
    try {
      member();
    } catch (const Failure&) {
      recover(start, member_start);
    }
  }
  expect_punct("}", "to close " + std::string(context.substr(context.find(' ') + 1)));
}

// ---------------------------------------------------------------------------
// Model

ModelBundle Parser::parse_model() {
  ModelBundle b;
  auto top = [this] {
    return is_word("class") || is_word("object") || is_word("statechart") || is_word("chart");
  };
  while (!at_end()) {
    std::size_t start = pos_;
    try {
      if (is_word("class")) {
        b.classes.push_back(parse_class());
      } else if (is_word("object")) {
        b.objects.push_back(parse_object());
      } else if (is_word("statechart")) {
        b.statecharts.push_back(parse_statechart());
      } else if (is_word("chart")) {
        b.charts.push_back(parse_chart());
      } else {
        fail_here("expected 'class', 'object', 'statechart' or 'chart'");
      }
    } catch (const Failure&) {
      recover(start, top);
      if (is_punct("}")) take();
    }
  }
  return b;
}

ValueKind Parser::parse_kind(std::string& ref_class) {
  const Token& t = peek();
  if (t.kind == Token::Kind::ident) {
    if (auto k = parse_value_kind(t.text)) {
      take();
      if (*k == ValueKind::object_ref && peek().kind == Token::Kind::ident &&
          !is_reserved(peek().text)) {
        ref_class = take().text;
      }
      return *k;
    }
  }
  fail_here("expected a value kind (int, string, bool, ref)");
}

Value Parser::parse_literal() {
  const Token& t = peek();
  if (t.kind == Token::Kind::integer) return Value(expect_int("an integer"));
  if (is_punct("-") && peek(1).kind == Token::Kind::integer) {
    take();
    const Token& d = peek();
    std::uint64_t u = 0;
    auto [ptr, ec] = std::from_chars(d.text.data(), d.text.data() + d.text.size(), u);
    constexpr std::uint64_t limit = std::uint64_t{1} << 63;
    if (ec != std::errc() || ptr != d.text.data() + d.text.size() || u > limit) {
      fail_here("integer out of range");
    }
    take();
    return Value(u == limit ? std::numeric_limits<std::int64_t>::min()
                            : -static_cast<std::int64_t>(u));
  }
  if (t.kind == Token::Kind::string) return Value(take().text);
  if (accept_word("true")) return Value(true);
  if (accept_word("false")) return Value(false);
  if (accept_word("null")) return Value::null_ref();
  if (t.kind == Token::Kind::ident && !is_reserved(t.text)) return Value(ObjectRef{take().text});
  fail_here("expected a literal");
}

ClassDef Parser::parse_class() {
  ClassDef c;
  c.loc = here();
  expect_word("class", "");
  c.name = expect_name("a class name");
  auto member_start = [this] {
    return is_word("property") || is_word("signal") || is_word("method");
  };
  block("after class name", member_start, [&] {
    if (is_word("property")) {
      PropertyDecl p;
      p.loc = here();
      take();
      p.name = expect_member_name("a property name");
      expect_punct(":", "after property name");
      p.kind = parse_kind(p.ref_class);
      p.default_value = accept_punct("=") ? parse_literal() : Value::default_for(p.kind);
      c.properties.push_back(std::move(p));
    } else if (is_word("signal") || is_word("method")) {
      bool signal = take().text == "signal";
      EventDecl e;
      e.loc = here();
      e.name = expect_name("an event name");
      expect_punct("/", "before event arity");
      e.arity = static_cast<int>(std::min<std::int64_t>(expect_int("an arity"), 1000));
      (signal ? c.signals : c.methods).push_back(std::move(e));
    } else {
      fail_here("expected 'property', 'signal' or 'method'");
    }
    accept_punct(";");
  });
  return c;
}

ObjectDecl Parser::parse_object() {
  ObjectDecl o;
  o.loc = here();
  expect_word("object", "");
  o.id = expect_name("an object id");
  expect_punct(":", "after object id");
  o.cls = expect_name("a class name");
  if (is_punct("{")) {
    block("after object class", [this] { return peek().kind == Token::Kind::ident; }, [&] {
      std::string prop = expect_member_name("a property name");
      expect_punct("=", "after property name");
      o.values.emplace_back(std::move(prop), parse_literal());
      if (!accept_punct(";")) accept_punct(",");
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Statecharts

bool Parser::at_state_decl() const {
  return is_word("state") || is_word("initial") || is_word("choice") || is_word("final");
}

StatechartSpec Parser::parse_statechart() {
  StatechartSpec sc;
  sc.loc = here();
  expect_word("statechart", "");
  sc.name = expect_name("a statechart name");
  expect_word("for", "after statechart name");
  sc.owner_class = expect_name("a class name");
  sc.states.push_back(StateNode{});
  sc.states[0].loc = sc.loc;
  targets_.clear();

  Region direct;
  bool initial_seen = false;
  bool saw_region = false;
  std::vector<Region> regions;
  auto member_start = [this] {
    return at_state_decl() || is_word("var") || is_word("event") || is_word("region");
  };
  block("after statechart header", member_start, [&] {
    if (is_word("var")) {
      VarDecl v;
      v.loc = here();
      take();
      v.name = expect_member_name("a variable name");
      expect_punct(":", "after variable name");
      v.kind = parse_kind(v.ref_class);
      v.initial = accept_punct("=") ? parse_literal() : Value::default_for(v.kind);
      sc.variables.push_back(std::move(v));
    } else if (is_word("event")) {
      EventDecl e;
      e.loc = here();
      take();
      e.name = expect_name("an event name");
      expect_punct("/", "before event arity");
      e.arity = static_cast<int>(std::min<std::int64_t>(expect_int("an arity"), 1000));
      sc.internal_events.push_back(std::move(e));
    } else if (is_word("region")) {
      SourceLoc loc = here();
      if (!direct.states.empty()) diags_.push_back({loc, "states and regions mixed at top level"});
      saw_region = true;
      take();
      Region r;
      bool seen = false;
      block("after 'region'", [this] { return at_state_decl(); },
            [&] { parse_state_decl(sc, 0, r, seen); });
      if (r.states.empty()) diags_.push_back({loc, "empty region"});
      regions.push_back(std::move(r));
    } else if (at_state_decl()) {
      if (saw_region) diags_.push_back({here(), "states and regions mixed at top level"});
      parse_state_decl(sc, 0, direct, initial_seen);
    } else {
      fail_here("expected 'state', 'choice', 'final', 'region', 'var' or 'event'");
    }
    accept_punct(";");
  });
  if (!direct.states.empty()) regions.insert(regions.begin(), std::move(direct));
  sc.states[0].regions = std::move(regions);
  sc.finalize();

  for (const auto& t : targets_) {
    int target = sc.find_state(t.path);
    if (target < 0) {
      diags_.push_back({t.loc, "transition to undeclared or ambiguous state '" + t.path + "'"});
    }
    sc.states[t.state].transitions[t.transition].target = target < 0 ? 0 : target;
  }
  targets_.clear();
  return sc;
}

void Parser::parse_state_decl(StatechartSpec& sc, int parent, Region& region, bool& initial_seen) {
  SourceLoc loc = here();
  bool initial = accept_word("initial");
  StateNode node;
  node.loc = loc;
  node.parent = parent;
  if (accept_word("state")) {
    node.kind = StateKind::basic;
  } else if (accept_word("choice")) {
    node.kind = StateKind::choice;
  } else if (accept_word("final")) {
    node.kind = StateKind::final_state;
    if (initial) diags_.push_back({loc, "a final state cannot be initial"});
  } else {
    fail_here("expected 'state', 'choice' or 'final'");
  }
  node.name = expect_name("a state name");
  int self = static_cast<int>(sc.states.size());
  StateKind kind = node.kind;
  sc.states.push_back(std::move(node));
  region.states.push_back(self);
  if (initial) {
    if (initial_seen) diags_.push_back({loc, "region has more than one initial state"});
    region.initial = static_cast<int>(region.states.size()) - 1;
    initial_seen = true;
  }

  if (kind == StateKind::choice) {
    std::vector<Transition> branches;
    std::vector<std::pair<std::string, SourceLoc>> paths;
    block("after choice name", [this] { return is_punct("[") || is_word("else"); }, [&] {
      Transition t;
      t.loc = here();
      if (accept_word("else")) {
        t.is_else = true;
      } else {
        expect_punct("[", "before branch guard");
        t.guard = parse_expr();
        expect_punct("]", "after branch guard");
      }
      expect_punct("->", "in choice branch");
      SourceLoc tl = here();
      std::string path = parse_dotted();
      if (accept_punct("/")) t.actions = parse_actions();
      accept_punct(";");
      branches.push_back(std::move(t));
      paths.emplace_back(std::move(path), tl);
    });
    for (std::size_t i = 0; i < paths.size(); ++i) {
      targets_.push_back({self, static_cast<int>(i), paths[i].first, paths[i].second});
    }
    sc.states[self].transitions = std::move(branches);
  } else if (kind == StateKind::basic && is_punct("{")) {
    parse_state_body(sc, self);
  }
}

void Parser::parse_state_body(StatechartSpec& sc, int self) {
  Region direct;
  bool initial_seen = false;
  std::vector<Region> regions;
  std::vector<Transition> transitions;
  std::vector<std::pair<std::string, SourceLoc>> paths;
  std::vector<Action> entry;
  std::vector<Action> exit;

  auto member_start = [this] {
    return at_state_decl() || is_word("region") || is_word("entry") || is_word("exit") ||
           is_word("on") || is_word("after") || is_word("every");
  };
  block("after state name", member_start, [&] {
    if (is_word("entry") || is_word("exit")) {
      bool is_entry = take().text == "entry";
      expect_punct("/", "before actions");
      auto acts = parse_actions();
      auto& dst = is_entry ? entry : exit;
      dst.insert(dst.end(), acts.begin(), acts.end());
    } else if (is_word("on") || is_word("after") || is_word("every")) {
      Transition t;
      t.loc = here();
      std::string kw = take().text;
      if (kw == "on") {
        t.trigger.kind = Trigger::Kind::event;
        t.trigger.event = expect_name("an event name");
        if (is_punct("(")) t.trigger.params = parse_params();
      } else {
        t.trigger.kind = kw == "after" ? Trigger::Kind::after : Trigger::Kind::every;
        t.trigger.duration_ms = expect_duration();
      }
      if (accept_punct("[")) {
        t.guard = parse_expr();
        expect_punct("]", "after guard");
      }
      std::string path;
      SourceLoc tl = here();
      if (accept_punct("->")) {
        tl = here();
        path = parse_dotted();
      }
      if (accept_punct("/")) t.actions = parse_actions();
      transitions.push_back(std::move(t));
      paths.emplace_back(std::move(path), tl);
    } else if (is_word("region")) {
      SourceLoc loc = here();
      if (!direct.states.empty()) diags_.push_back({loc, "states and regions mixed in one state"});
      take();
      Region r;
      bool seen = false;
      block("after 'region'", [this] { return at_state_decl(); },
            [&] { parse_state_decl(sc, self, r, seen); });
      if (r.states.empty()) diags_.push_back({loc, "empty region"});
      regions.push_back(std::move(r));
    } else if (at_state_decl()) {
      if (!regions.empty()) diags_.push_back({here(), "states and regions mixed in one state"});
      parse_state_decl(sc, self, direct, initial_seen);
    } else {
      fail_here("expected a state member");
    }
    accept_punct(";");
  });
  if (!direct.states.empty()) regions.insert(regions.begin(), std::move(direct));
  StateNode& node = sc.states[self];
  node.regions = std::move(regions);
  node.entry = std::move(entry);
  node.exit = std::move(exit);
  node.transitions = std::move(transitions);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!paths[i].first.empty()) {
      targets_.push_back({self, static_cast<int>(i), paths[i].first, paths[i].second});
    }
  }
}

std::string Parser::parse_dotted() {
  std::string out = expect_name("a state name");
  while (accept_punct(".")) out += "." + expect_name("a state name");
  return out;
}

std::vector<std::string> Parser::parse_params() {
  std::vector<std::string> out;
  expect_punct("(", "");
  if (!is_punct(")")) {
    do {
      out.push_back(expect_name("a parameter name"));
    } while (accept_punct(","));
  }
  expect_punct(")", "after parameters");
  return out;
}

std::vector<Action> Parser::parse_actions() {
  std::vector<Action> out;
  out.push_back(parse_action());
  auto at_action = [this] {
    const Token& t = peek();
    if (t.kind != Token::Kind::ident) return false;
    if (t.text == "raise" || t.text == "send") return true;
    if (kValueWords.count(t.text) && t.text != "self") return false;
    return is_punct(":=", 1) || is_punct(".", 1);
  };
  while (is_punct(";") && [&] {
    ++pos_;
    bool more = at_action();
    --pos_;
    return more;
  }()) {
    take();
    out.push_back(parse_action());
  }
  return out;
}

Action Parser::parse_action() {
  Action a;
  a.loc = here();
  auto components = [this] {
    std::vector<std::string> path;
    if (accept_word("self")) {
      path.push_back("self");
    } else {
      path.push_back(expect_member_name("a name"));
    }
    while (accept_punct(".")) path.push_back(expect_any_ident("a name"));
    return path;
  };
  if (accept_word("raise")) {
    a.kind = Action::Kind::raise;
    a.event = expect_name("an event name");
    if (is_punct("(")) a.args = parse_args();
    return a;
  }
  if (accept_word("send")) {
    a.kind = Action::Kind::send;
    SourceLoc loc = here();
    auto path = components();
    if (path.size() < 2) fail_here("expected target.event after 'send'");
    a.event = path.back();
    path.pop_back();
    a.target = Expr::make_name(std::move(path), loc);
    if (is_punct("(")) a.args = parse_args();
    return a;
  }
  a.kind = Action::Kind::assign;
  SourceLoc loc = here();
  a.target = Expr::make_name(components(), loc);
  expect_punct(":=", "in assignment");
  a.value = parse_expr();
  return a;
}

// ---------------------------------------------------------------------------
// Charts

bool Parser::at_element() const {
  return is_punct("@") || is_word("sync") || is_word("cond") || is_word("loop") ||
         (peek().kind == Token::Kind::ident && is_punct("->", 1));
}

ChartSpec Parser::parse_chart() {
  ChartSpec c;
  c.loc = here();
  expect_word("chart", "");
  c.name = expect_name("a chart name");
  auto member_start = [this] {
    return at_element() || is_word("lifeline") || is_word("var") || is_word("forbid");
  };
  block("after chart name", member_start, [&] {
    if (is_word("lifeline")) {
      Lifeline l;
      l.loc = here();
      take();
      l.name = expect_name("a lifeline name");
      expect_punct(":", "after lifeline name");
      l.cls = expect_name("a class name");
      if (accept_punct("=")) {
        l.binding = Lifeline::Binding::concrete;
        l.object = expect_name("an object id");
      } else if (accept_word("where")) {
        l.binding = Lifeline::Binding::symbolic;
        expect_punct("(", "after 'where'");
        l.predicate = parse_expr();
        expect_punct(")", "after binding expression");
      } else if (accept_word("all")) {
        l.binding = Lifeline::Binding::all;
      } else {
        l.binding = Lifeline::Binding::symbolic;
      }
      c.lifelines.push_back(std::move(l));
    } else if (is_word("var")) {
      ChartVar v;
      v.loc = here();
      take();
      v.name = expect_member_name("a variable name");
      expect_punct(":", "after variable name");
      v.kind = parse_kind(v.ref_class);
      c.variables.push_back(std::move(v));
    } else if (is_word("forbid")) {
      c.body.forbids.push_back(parse_forbid());
    } else if (at_element()) {
      parse_element(c, c.body);
    } else {
      fail_here("expected a lifeline, variable, message, sync, cond, loop or forbid");
    }
    accept_punct(";");
  });
  return c;
}

std::vector<std::string> Parser::parse_name_list() {
  std::vector<std::string> out;
  expect_punct("(", "before lifeline list");
  do {
    out.push_back(expect_name("a lifeline name"));
  } while (accept_punct(","));
  expect_punct(")", "after lifeline list");
  return out;
}

std::vector<Expr> Parser::parse_args() {
  std::vector<Expr> out;
  expect_punct("(", "before arguments");
  if (!is_punct(")")) {
    do {
      out.push_back(parse_expr());
    } while (accept_punct(","));
  }
  expect_punct(")", "after arguments");
  return out;
}

void Parser::parse_element(ChartSpec& chart, Segment& seg) {
  Element e;
  e.loc = here();
  if (accept_punct("@")) {
    e.label = expect_name("a label");
    e.loc = here();
  }
  if (accept_word("sync")) {
    e.kind = Element::Kind::sync;
    e.lifelines = parse_name_list();
  } else if (accept_word("cond")) {
    e.kind = Element::Kind::cond;
    e.hot = false;
    if (accept_word("hot")) {
      e.hot = true;
    } else {
      accept_word("cold");
    }
    expect_punct("(", "before condition");
    e.expr = parse_expr();
    expect_punct(")", "after condition");
    if (accept_word("on")) e.lifelines = parse_name_list();
  } else if (accept_word("loop")) {
    e.kind = Element::Kind::loop;
    if (accept_word("while")) {
      e.loop_kind = Element::LoopKind::while_expr;
      expect_punct("(", "after 'while'");
      e.expr = parse_expr();
      expect_punct(")", "after loop condition");
    } else if (accept_word("each")) {
      e.loop_kind = Element::LoopKind::each;
      e.each = expect_name("a lifeline name");
    } else {
      e.loop_kind = Element::LoopKind::count;
      e.count = expect_int("a loop count, 'while' or 'each'");
    }
    auto member_start = [this] { return at_element() || is_word("forbid"); };
    block("after loop header", member_start, [&] {
      if (is_word("forbid")) {
        e.body.forbids.push_back(parse_forbid());
      } else if (at_element()) {
        parse_element(chart, e.body);
      } else {
        fail_here("expected a message, sync, cond, loop or forbid");
      }
      accept_punct(";");
    });
  } else {
    e.kind = Element::Kind::message;
    e.from = is_word("env") ? take().text : expect_name("a lifeline name");
    expect_punct("->", "in message");
    e.to = expect_name("a lifeline name");
    expect_punct(":", "before message name");
    e.name = expect_name("a message name");
    if (is_punct("(")) e.args = parse_args();
    for (;;) {
      if (accept_word("exec")) {
        e.executed = true;
      } else if (accept_word("mon")) {
        e.executed = false;
      } else if (accept_word("hot")) {
        e.hot = true;
      } else if (accept_word("cold")) {
        e.hot = false;
      } else {
        break;
      }
    }
  }
  seg.elements.push_back(std::move(e));
}

Forbid Parser::parse_forbid() {
  Forbid f;
  f.loc = here();
  expect_word("forbid", "");
  f.from = is_word("env") ? take().text : expect_name("a lifeline name");
  expect_punct("->", "in forbidden message");
  f.to = expect_name("a lifeline name");
  expect_punct(":", "before message name");
  f.name = expect_name("a message name");
  if (is_punct("(")) f.args = parse_args();
  if (accept_word("from")) {
    if (!accept_word("start")) f.from_label = expect_name("a label or 'start'");
  }
  if (accept_word("to")) {
    if (!accept_word("end")) f.to_label = expect_name("a label or 'end'");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Expressions

Expr Parser::parse_expr() { return parse_ternary(); }

Expr Parser::parse_ternary() {
  SourceLoc loc = here();
  Expr cond = parse_binary(0);
  if (!accept_punct("?")) return cond;
  Expr a = parse_ternary();
  expect_punct(":", "in conditional expression");
  Expr b = parse_ternary();
  Expr e;
  e.op = Expr::Op::ternary;
  e.loc = loc;
  e.kids = {std::move(cond), std::move(a), std::move(b)};
  return e;
}

namespace {

struct BinaryOp {
  std::string_view symbol;
  Expr::Op op;
};

const std::vector<std::vector<BinaryOp>> kLevels = {
    {{"||", Expr::Op::logical_or}},
    {{"&&", Expr::Op::logical_and}},
    {{"==", Expr::Op::eq}, {"!=", Expr::Op::ne}},
    {{"<", Expr::Op::lt}, {"<=", Expr::Op::le}, {">", Expr::Op::gt}, {">=", Expr::Op::ge}},
    {{"+", Expr::Op::add}, {"-", Expr::Op::sub}},
    {{"*", Expr::Op::mul}, {"/", Expr::Op::div}, {"%", Expr::Op::mod}},
};

}  // namespace

Expr Parser::parse_binary(int level) {
  if (level == static_cast<int>(kLevels.size())) return parse_unary();
  Expr lhs = parse_binary(level + 1);
  for (;;) {
    const BinaryOp* match = nullptr;
    for (const auto& op : kLevels[level]) {
      if (is_punct(op.symbol)) match = &op;
    }
    if (!match) return lhs;
    SourceLoc loc = here();
    take();
    Expr rhs = parse_binary(level + 1);
    lhs = Expr::make_binary(match->op, std::move(lhs), std::move(rhs), loc);
  }
}

Expr Parser::parse_unary() {
  SourceLoc loc = here();
  if (is_punct("-") && peek(1).kind == Token::Kind::integer) {
    return Expr::make_literal(parse_literal(), loc);
  }
  if (accept_punct("-")) return Expr::make_unary(Expr::Op::negate, parse_unary(), loc);
  if (accept_punct("!")) return Expr::make_unary(Expr::Op::logical_not, parse_unary(), loc);
  return parse_primary();
}

Expr Parser::parse_primary() {
  SourceLoc loc = here();
  const Token& t = peek();
  switch (t.kind) {
    case Token::Kind::integer:
    case Token::Kind::string:
      return Expr::make_literal(parse_literal(), loc);
    case Token::Kind::punct:
      if (accept_punct("(")) {
        Expr e = parse_expr();
        expect_punct(")", "to close parenthesis");
        return e;
      }
      break;
    case Token::Kind::ident: {
      if (t.text == "true" || t.text == "false" || t.text == "null") {
        return Expr::make_literal(parse_literal(), loc);
      }
      if (t.text == "active") {
        take();
        expect_punct("(", "after 'active'");
        Expr e;
        e.op = Expr::Op::active;
        e.loc = loc;
        if (peek().kind == Token::Kind::ident && is_punct("::", 1)) {
          e.object = expect_name("an object id");
          take();
        }
        e.path.push_back(expect_name("a state name"));
        while (accept_punct(".")) e.path.push_back(expect_name("a state name"));
        expect_punct(")", "after state path");
        return e;
      }
      if (t.text != "self" && kValueWords.count(t.text)) break;
      std::vector<std::string> path{take().text};
      while (accept_punct(".")) path.push_back(expect_any_ident("a property name"));
      return Expr::make_name(std::move(path), loc);
    }
    default:
      break;
  }
  fail_here("expected an expression");
}

// ---------------------------------------------------------------------------
// Scripts

std::optional<Expr> Parser::parse_standalone_expr() {
  try {
    Expr e = parse_expr();
    if (!at_end()) fail_here("expected end of expression");
    return e;
  } catch (const Failure&) {
    return std::nullopt;
  }
}

Script Parser::parse_script() {
  Script out;
  auto step_start = [this] { return is_word("inject") || is_word("tick") || is_word("assert"); };
  while (!at_end()) {
    if (accept_punct(";")) continue;
    std::size_t start = pos_;
    try {
      out.push_back(parse_step());
    } catch (const Failure&) {
      recover(start, step_start);
      if (is_punct("}")) take();
    }
  }
  return out;
}

std::vector<Value> Parser::parse_literal_args() {
  std::vector<Value> out;
  expect_punct("(", "before arguments");
  if (!is_punct(")")) {
    do {
      out.push_back(parse_literal());
    } while (accept_punct(","));
  }
  expect_punct(")", "after arguments");
  return out;
}

ScriptStep Parser::parse_step() {
  ScriptStep s;
  s.loc = here();
  if (accept_word("inject")) {
    s.kind = ScriptStep::Kind::inject;
    if (!accept_word("env")) s.source = expect_name("'env' or a source object");
    s.target = expect_name("a target object");
    expect_punct(".", "between object and event");
    s.name = expect_name("an event name");
    if (is_punct("(")) s.args = parse_literal_args();
    return s;
  }
  if (accept_word("tick")) {
    s.kind = ScriptStep::Kind::tick;
    s.number = expect_duration();
    return s;
  }
  if (accept_word("assert")) {
    if (is_punct("==", 1)) {
      static const std::pair<std::string_view, ScriptStep::Kind> counters[] = {
          {"clock", ScriptStep::Kind::assert_clock},
          {"violations", ScriptStep::Kind::assert_violations},
          {"obligations", ScriptStep::Kind::assert_obligations}};
      for (const auto& [word, kind] : counters) {
        if (is_word(word)) {
          take();
          take();
          s.kind = kind;
          s.number = expect_int("an integer");
          return s;
        }
      }
    }
    s.target = expect_name("an object id");
    if (accept_word("in")) {
      s.kind = ScriptStep::Kind::assert_state;
      s.name = parse_dotted();
      return s;
    }
    s.kind = ScriptStep::Kind::assert_property;
    expect_punct(".", "between object and property");
    s.name = expect_member_name("a property name");
    if (accept_punct("!=")) {
      s.negated = true;
    } else {
      expect_punct("==", "in assertion");
    }
    s.expected = parse_literal();
    return s;
  }
  fail_here("expected 'inject', 'tick' or 'assert'");
}

}  // namespace rxm
