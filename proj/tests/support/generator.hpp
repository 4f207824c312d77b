#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace rxm::testing {

/// A random small system and a script over it, both as source text.
struct Generated {
  std::string model;
  std::string script;
};

/// Deterministic in `seed`. Models always validate; they may contain event
/// cycles that hit the step bound, which is a legal outcome.
Generated generate(std::uint64_t seed);

/// Random edits of `text` (byte flips, deletions, duplicated spans, token
/// swaps) for parser fuzzing.
std::string mutate(const std::string& text, std::mt19937_64& rng);

}  // namespace rxm::testing
