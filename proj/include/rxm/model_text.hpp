#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rxm/coordinator.hpp"
#include "rxm/lsc.hpp"
#include "rxm/object_model.hpp"
#include "rxm/script.hpp"
#include "rxm/statechart.hpp"

namespace rxm {

struct ObjectDecl {
  std::string id;
  std::string cls;
  PropertyMap values;  // refs name objects by id and may point forward
  SourceLoc loc;

  bool operator==(const ObjectDecl&) const = default;
};

/// Everything a model file declares, in declaration order.
struct ModelBundle {
  std::vector<ClassDef> classes;
  std::vector<ObjectDecl> objects;
  std::vector<StatechartSpec> statecharts;
  std::vector<ChartSpec> charts;

  bool operator==(const ModelBundle&) const = default;
};

struct ParseError {
  std::string file;
  int line = 0;
  int column = 0;
  std::string message;
  std::string excerpt;  // the offending source line

  /// file:line:column: message, then the excerpt and a caret line.
  std::string format() const;
};

template <typename T>
struct ParseResult {
  std::optional<T> value;
  std::vector<ParseError> errors;

  bool ok() const { return value.has_value(); }
};

struct SourceFile {
  std::string name;
  std::string text;
};

/// Parses and validates one model text.
ParseResult<ModelBundle> parse_model(std::string_view text, const std::string& file = "<model>");

/// Parses several files, merges their declarations in order, then validates
/// the merged model.
ParseResult<ModelBundle> parse_models(const std::vector<SourceFile>& files);

/// Syntax only; no cross-reference checks.
ParseResult<ModelBundle> parse_model_syntax(std::string_view text, const std::string& file = "<model>");

/// Cross-reference and semantic checks over a syntactically valid bundle.
std::vector<Diagnostic> validate_bundle(const ModelBundle& bundle);

/// Reads a model file set from disk; unreadable files become errors.
ParseResult<ModelBundle> load_models(const std::vector<std::string>& paths);

std::string serialize_model(const ModelBundle& bundle);

/// Object store holding the bundle's classes and objects. Throws Error.
ObjectStore build_store(const ModelBundle& bundle);

/// A coordinator with one machine per object of each statechart's class and
/// every chart registered, not yet started.
Coordinator build_coordinator(const ModelBundle& bundle, CoordinatorOptions options = {});

ParseResult<Script> parse_script(std::string_view text, const ModelBundle& bundle,
                                 const std::string& file = "<script>");
std::string serialize_script(const Script& script);

/// One expression in model syntax, e.g. a guard or a query predicate.
ParseResult<Expr> parse_expression(std::string_view text);

}  // namespace rxm
