#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rxm::testing {

/// Property names in reporting order.
const std::vector<std::string>& property_names();

/// Failures per property over generated systems; every name in
/// property_names() has an entry, empty when it held for every seed.
struct PropertyReport {
  std::uint64_t seeds = 0;
  std::uint64_t steps = 0;       // script steps executed across all seeds
  std::uint64_t entries = 0;     // trace entries checked
  std::uint64_t mutations = 0;   // fuzzed inputs parsed
  std::uint64_t lsc_entries = 0;
  std::uint64_t copy_pairs = 0;  // live copies compared across a step
  std::map<std::string, std::vector<std::string>> failures;

  bool passed() const;
};

/// Checks seeds [first, first + count) with the given step bound.
PropertyReport check_properties(std::uint64_t first, std::uint64_t count, std::int64_t step_bound = 500);

}  // namespace rxm::testing
