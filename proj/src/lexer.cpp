#include "lexer.hpp"

#include <array>
#include <cctype>

namespace rxm {

namespace {

constexpr std::array<std::string_view, 9> kTwoChar = {"->", "::", ":=", "==", "!=",
                                                     "<=", ">=", "&&", "||"};

constexpr std::string_view kSingle = "{}()[],;:.=/<>+-*%!?@";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = Token::Kind::ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::integer;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      bool bad_escape = false;
      while (j < src.size()) {
        char d = src[j];
        if (d == '"') {
          closed = true;
          ++j;
          break;
        }
        if (d == '\\' && j + 1 < src.size()) {
          char e = src[j + 1];
          switch (e) {
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            default: bad_escape = true; value += e;
          }
          j += 2;
          continue;
        }
        value += d;
        ++j;
      }
      if (!closed) {
        t.kind = Token::Kind::invalid;
        t.text = "unterminated string literal";
      } else if (bad_escape) {
        t.kind = Token::Kind::invalid;
        t.text = "unknown escape sequence in string literal";
      } else {
        t.kind = Token::Kind::string;
        t.text = std::move(value);
      }
      advance(j - i);
    } else {
      std::string_view two = src.substr(i, 2);
      bool matched = false;
      for (auto p : kTwoChar) {
        if (two == p) {
          t.kind = Token::Kind::punct;
          t.text = std::string(p);
          advance(2);
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (kSingle.find(c) != std::string_view::npos) {
          t.kind = Token::Kind::punct;
          t.text = std::string(1, c);
        } else {
          t.kind = Token::Kind::invalid;
          t.text = std::isprint(static_cast<unsigned char>(c))
                       ? std::string("unexpected character '") + c + "'"
                       : "unexpected byte " + std::to_string(static_cast<unsigned char>(c));
        }
        advance(1);
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

}  // namespace rxm
