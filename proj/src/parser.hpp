#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lexer.hpp"
#include "rxm/model_text.hpp"

namespace rxm {

/// Words that cannot name classes, objects, states, lifelines or variables.
bool is_reserved(std::string_view word);

/// Recursive-descent parser shared by model and script text. Errors are
/// collected; parsing resumes at the next member of the enclosing block.
class Parser {
 public:
  Parser(std::string_view text, int file);

  ModelBundle parse_model();
  Script parse_script();
  /// A single expression spanning the whole input.
  std::optional<Expr> parse_standalone_expr();

  std::vector<Diagnostic>& diagnostics() { return diags_; }

 private:
  struct Failure {};

  const Token& peek(std::size_t k = 0) const;
  bool at_end() const { return peek().kind == Token::Kind::end; }
  bool is_punct(std::string_view p, std::size_t k = 0) const;
  bool is_word(std::string_view w, std::size_t k = 0) const;
  bool accept_punct(std::string_view p);
  bool accept_word(std::string_view w);
  Token take();
  SourceLoc loc_of(const Token& t) const { return SourceLoc{t.line, t.column, file_}; }
  SourceLoc here() const { return loc_of(peek()); }

  [[noreturn]] void fail(const Token& at, const std::string& message);
  [[noreturn]] void fail_here(const std::string& message) { fail(peek(), message); }
  void expect_punct(std::string_view p, std::string_view context);
  void expect_word(std::string_view w, std::string_view context);
  std::string expect_name(std::string_view what);
  std::string expect_member_name(std::string_view what);
  std::string expect_any_ident(std::string_view what);
  std::int64_t expect_int(std::string_view what);
  std::int64_t expect_duration();

  /// Skips to a token at brace depth zero satisfying `stop`, or a closing brace.
  void recover(std::size_t start, const std::function<bool()>& stop);
  template <typename F>
  void block(std::string_view context, const std::function<bool()>& member_start, F&& member);

  // model
  ClassDef parse_class();
  ObjectDecl parse_object();
  StatechartSpec parse_statechart();
  ChartSpec parse_chart();
  ValueKind parse_kind(std::string& ref_class);
  Value parse_literal();

  // statecharts
  struct PendingTarget {
    int state;
    int transition;
    std::string path;
    SourceLoc loc;
  };
  bool at_state_decl() const;
  void parse_state_decl(StatechartSpec& sc, int parent, Region& region, bool& initial_seen);
  void parse_state_body(StatechartSpec& sc, int self);
  std::vector<Action> parse_actions();
  Action parse_action();
  std::string parse_dotted();
  std::vector<std::string> parse_params();

  // charts
  bool at_element() const;
  void parse_element(ChartSpec& chart, Segment& seg);
  Forbid parse_forbid();
  std::vector<Expr> parse_args();
  std::vector<std::string> parse_name_list();

  // expressions
  Expr parse_expr();
  Expr parse_ternary();
  Expr parse_binary(int level);
  Expr parse_unary();
  Expr parse_primary();

  // scripts
  ScriptStep parse_step();
  std::vector<Value> parse_literal_args();

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int file_ = 0;
  std::vector<Diagnostic> diags_;
  std::vector<PendingTarget> targets_;
};

}  // namespace rxm
