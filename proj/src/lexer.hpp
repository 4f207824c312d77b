#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rxm {

struct Token {
  enum class Kind { ident, integer, string, punct, end, invalid };

  Kind kind = Kind::end;
  std::string text;  // identifier, punctuation, decoded string, digits, or error message
  int line = 1;
  int column = 1;
};

/// Splits model or script text into tokens. Malformed input yields `invalid`
/// tokens carrying a message; the stream always ends with `end`.
std::vector<Token> tokenize(std::string_view text);

}  // namespace rxm
