#pragma once

#include <string>

namespace rxm {

/// Position of a construct in model text. Locations are diagnostic metadata
/// only: they compare equal unconditionally so that structural equality of
/// models ignores where things were written.
struct SourceLoc {
  int line = 0;
  int column = 0;
  int file = 0;  // index into the file list of a multi-file parse

  bool operator==(const SourceLoc&) const { return true; }
};

struct Diagnostic {
  SourceLoc loc;
  std::string message;
};

}  // namespace rxm
