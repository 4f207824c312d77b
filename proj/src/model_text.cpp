#include "rxm/model_text.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "parser.hpp"
#include "rxm/error.hpp"

namespace rxm {

namespace {

std::string line_of(std::string_view text, int line) {
  int current = 1;
  std::size_t start = 0;
  while (current < line) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) return {};
    start = nl + 1;
    ++current;
  }
  std::size_t end = text.find('\n', start);
  std::string out(text.substr(start, end == std::string_view::npos ? text.npos : end - start));
  if (!out.empty() && out.back() == '\r') out.pop_back();
  return out;
}

std::vector<ParseError> to_errors(const std::vector<Diagnostic>& diags,
                                  const std::vector<SourceFile>& files) {
  std::vector<ParseError> out;
  for (const auto& d : diags) {
    ParseError e;
    std::size_t f = static_cast<std::size_t>(d.loc.file);
    if (f < files.size()) {
      e.file = files[f].name;
      e.excerpt = d.loc.line > 0 ? line_of(files[f].text, d.loc.line) : std::string();
    }
    e.line = d.loc.line;
    e.column = d.loc.column;
    e.message = d.message;
    out.push_back(std::move(e));
  }
  return out;
}

/// Builds the store; errors go to `diags` when given, otherwise they throw.
ObjectStore make_store(const ModelBundle& bundle, std::vector<Diagnostic>* diags) {
  ObjectStore store;
  auto guarded = [&](const SourceLoc& loc, auto&& fn) {
    if (!diags) {
      fn();
      return;
    }
    try {
      fn();
    } catch (const Error& e) {
      diags->push_back({loc, e.what()});
    }
  };
  for (const auto& c : bundle.classes) {
    guarded(c.loc, [&] { store.register_class(c); });
  }
  // Refs may point forward, so objects are created first and refs set after.
  std::vector<const ObjectDecl*> created;
  for (const auto& o : bundle.objects) {
    guarded(o.loc, [&] {
      auto cls = store.find_class(o.cls);
      if (!cls) throw Error(ErrorKind::unknown_class, "object '" + o.id + "': unknown class '" + o.cls + "'");
      PropertyMap plain;
      for (const auto& [name, value] : o.values) {
        if (!value.is_ref()) plain.emplace_back(name, value);
      }
      store.create_object(*cls, o.id, plain);
      created.push_back(&o);
    });
  }
  for (const ObjectDecl* o : created) {
    for (const auto& [name, value] : o->values) {
      if (!value.is_ref()) continue;
      guarded(o->loc, [&] { store.set(ObjectRef{o->id}, name, value); });
    }
  }
  return store;
}

}  // namespace

std::string ParseError::format() const {
  std::ostringstream out;
  out << (file.empty() ? "<input>" : file);
  if (line > 0) out << ':' << line << ':' << column;
  out << ": " << message;
  if (!excerpt.empty()) {
    out << "\n  " << excerpt << "\n  ";
    for (int i = 1; i < column && i <= static_cast<int>(excerpt.size()); ++i) {
      out << (excerpt[i - 1] == '\t' ? '\t' : ' ');
    }
    out << '^';
  }
  return out.str();
}

std::vector<Diagnostic> validate_bundle(const ModelBundle& bundle) {
  std::vector<Diagnostic> diags;
  ObjectStore store = make_store(bundle, &diags);

  std::map<std::string, const StatechartSpec*, std::less<>> by_class;
  std::set<std::string, std::less<>> names;
  for (const auto& sc : bundle.statecharts) {
    if (!names.insert(sc.name).second) {
      diags.push_back({sc.loc, "duplicate statechart '" + sc.name + "'"});
    }
    if (!by_class.emplace(sc.owner_class, &sc).second) {
      diags.push_back({sc.loc, "class '" + sc.owner_class + "' already has a statechart"});
    }
  }
  MachineSpecLookup remote = [&](std::string_view object) -> const StatechartSpec* {
    if (!store.contains(object)) return nullptr;
    auto it = by_class.find(store.class_of(ObjectRef{std::string(object)}).name);
    return it == by_class.end() ? nullptr : it->second;
  };
  for (const auto& sc : bundle.statecharts) {
    auto more = validate_statechart(sc, store, remote);
    diags.insert(diags.end(), more.begin(), more.end());
  }

  names.clear();
  for (const auto& chart : bundle.charts) {
    if (!names.insert(chart.name).second) {
      diags.push_back({chart.loc, "duplicate chart '" + chart.name + "'"});
    }
    auto more = validate_chart(chart, store);
    diags.insert(diags.end(), more.begin(), more.end());
  }
  return diags;
}

ParseResult<ModelBundle> parse_model_syntax(std::string_view text, const std::string& file) {
  Parser parser(text, 0);
  ModelBundle bundle = parser.parse_model();
  ParseResult<ModelBundle> out;
  out.errors = to_errors(parser.diagnostics(), {{file, std::string(text)}});
  if (out.errors.empty()) out.value = std::move(bundle);
  return out;
}

ParseResult<ModelBundle> parse_models(const std::vector<SourceFile>& files) {
  ModelBundle merged;
  std::vector<Diagnostic> diags;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Parser parser(files[i].text, static_cast<int>(i));
    ModelBundle b = parser.parse_model();
    diags.insert(diags.end(), parser.diagnostics().begin(), parser.diagnostics().end());
    auto append = [](auto& dst, auto& src) {
      std::move(src.begin(), src.end(), std::back_inserter(dst));
    };
    append(merged.classes, b.classes);
    append(merged.objects, b.objects);
    append(merged.statecharts, b.statecharts);
    append(merged.charts, b.charts);
  }
  ParseResult<ModelBundle> out;
  if (diags.empty()) diags = validate_bundle(merged);
  out.errors = to_errors(diags, files);
  if (out.errors.empty()) out.value = std::move(merged);
  return out;
}

ParseResult<ModelBundle> parse_model(std::string_view text, const std::string& file) {
  return parse_models({{file, std::string(text)}});
}

ParseResult<ModelBundle> load_models(const std::vector<std::string>& paths) {
  std::vector<SourceFile> files;
  ParseResult<ModelBundle> failed;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      failed.errors.push_back({path, 0, 0, "cannot read file", {}});
      continue;
    }
    std::ostringstream text;
    text << in.rdbuf();
    files.push_back({path, text.str()});
  }
  if (!failed.errors.empty()) return failed;
  return parse_models(files);
}

ObjectStore build_store(const ModelBundle& bundle) { return make_store(bundle, nullptr); }

Coordinator build_coordinator(const ModelBundle& bundle, CoordinatorOptions options) {
  Coordinator coord(build_store(bundle), options);
  std::map<std::string, std::shared_ptr<const StatechartSpec>, std::less<>> by_class;
  for (const auto& sc : bundle.statecharts) {
    by_class.emplace(sc.owner_class, std::make_shared<const StatechartSpec>(sc));
  }
  for (const auto& obj : coord.store().objects()) {
    const ClassDef& cls = coord.store().class_def(obj.cls);
    auto it = by_class.find(cls.name);
    if (it != by_class.end()) coord.register_machine(it->second, obj.id);
  }
  for (const auto& chart : bundle.charts) {
    coord.register_chart(std::make_shared<const ChartSpec>(chart));
  }
  return coord;
}

ParseResult<Script> parse_script(std::string_view text, const ModelBundle& bundle,
                                 const std::string& file) {
  Parser parser(text, 0);
  Script script = parser.parse_script();
  std::vector<Diagnostic> diags = parser.diagnostics();

  if (diags.empty()) {
    ObjectStore store = build_store(bundle);
    auto class_of = [&](const std::string& id) -> const ClassDef* {
      return store.contains(id) ? &store.class_of(ObjectRef{id}) : nullptr;
    };
    auto check_object = [&](const ScriptStep& s, const std::string& id) {
      if (class_of(id)) return true;
      diags.push_back({s.loc, "unknown object '" + id + "'"});
      return false;
    };
    auto check_literals = [&](const ScriptStep& s, const std::vector<Value>& values) {
      for (const auto& v : values) {
        if (v.is_ref() && !v.as_ref().is_null()) check_object(s, v.as_ref().id);
      }
    };
    for (const auto& s : script) {
      switch (s.kind) {
        case ScriptStep::Kind::inject: {
          if (s.source) check_object(s, *s.source);
          check_literals(s, s.args);
          if (!check_object(s, s.target)) break;
          auto arity = class_of(s.target)->event_arity(s.name);
          if (!arity) {
            diags.push_back({s.loc, "object '" + s.target + "' does not accept '" + s.name + "'"});
          } else if (*arity != static_cast<int>(s.args.size())) {
            diags.push_back({s.loc, "'" + s.name + "' takes " + std::to_string(*arity) +
                                        " argument(s), got " + std::to_string(s.args.size())});
          }
          break;
        }
        case ScriptStep::Kind::tick:
          if (s.number < 0) diags.push_back({s.loc, "negative tick"});
          break;
        case ScriptStep::Kind::assert_property:
          check_literals(s, {s.expected});
          if (check_object(s, s.target) && !class_of(s.target)->find_property(s.name)) {
            diags.push_back({s.loc, "object '" + s.target + "' has no property '" + s.name + "'"});
          }
          break;
        case ScriptStep::Kind::assert_state: {
          if (!check_object(s, s.target)) break;
          const std::string& cls = class_of(s.target)->name;
          const StatechartSpec* spec = nullptr;
          for (const auto& sc : bundle.statecharts) {
            if (sc.owner_class == cls) spec = &sc;
          }
          if (!spec) {
            diags.push_back({s.loc, "object '" + s.target + "' has no statechart"});
          } else if (spec->find_state(s.name) < 0) {
            diags.push_back({s.loc, "unknown state '" + s.name + "' in " + spec->name});
          }
          break;
        }
        default:
          break;
      }
    }
  }

  ParseResult<Script> out;
  out.errors = to_errors(diags, {{file, std::string(text)}});
  if (out.errors.empty()) out.value = std::move(script);
  return out;
}

ParseResult<Expr> parse_expression(std::string_view text) {
  Parser parser(text, 0);
  auto expr = parser.parse_standalone_expr();
  ParseResult<Expr> out;
  out.errors = to_errors(parser.diagnostics(), {{"<expr>", std::string(text)}});
  if (out.errors.empty() && expr) out.value = std::move(*expr);
  return out;
}

}  // namespace rxm
