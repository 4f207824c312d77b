#include "rxm/event.hpp"

namespace rxm {

std::string Origin::to_string() const {
  switch (kind) {
    case Kind::environment: return "env";
    case Kind::statechart: return "sc:" + machine;
    case Kind::lsc: return "lsc:" + chart + "#" + std::to_string(copy);
    case Kind::timer: return "timer:" + machine;
  }
  return "env";
}

std::string EventInstance::describe() const {
  std::string out = source_id() + "->" + target.id + "." + name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].to_literal();
  }
  return out + ")";
}

}  // namespace rxm
