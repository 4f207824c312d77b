#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rxm/coordinator.hpp"
#include "rxm/model_text.hpp"

namespace rxm::testing {

inline std::string fixture(std::string_view name) {
  return std::string(RXM_FIXTURE_DIR) + "/" + std::string(name);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::string describe(const std::vector<ParseError>& errors) {
  std::string out;
  for (const auto& e : errors) out += e.format() + "\n";
  return out;
}

/// Parses and validates model text; throws with the diagnostics on failure.
inline ModelBundle model(std::string_view text) {
  auto r = parse_model(text);
  if (!r.ok()) throw std::runtime_error("model does not parse:\n" + describe(r.errors));
  return std::move(*r.value);
}

inline ModelBundle load_fixture(const std::vector<std::string>& names) {
  std::vector<std::string> paths;
  for (const auto& n : names) paths.push_back(fixture(n));
  auto r = load_models(paths);
  if (!r.ok()) throw std::runtime_error("fixture does not parse:\n" + describe(r.errors));
  return std::move(*r.value);
}

inline Script script(std::string_view text, const ModelBundle& bundle) {
  auto r = parse_script(text, bundle);
  if (!r.ok()) throw std::runtime_error("script does not parse:\n" + describe(r.errors));
  return std::move(*r.value);
}

inline Script script_fixture(const std::string& name, const ModelBundle& bundle) {
  return script(read_file(fixture(name)), bundle);
}

inline std::vector<std::string> names(const std::vector<TraceEntry>& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace) out.push_back(e.event.name);
  return out;
}

inline std::vector<std::string> lines(const std::vector<TraceEntry>& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace) out.push_back(trace_line(e));
  return out;
}

/// Starts a coordinator for `bundle` and runs `steps`; start entries included.
struct Run {
  Coordinator coord;
  std::vector<TraceEntry> trace;
  RunReport report;
};

inline Run run(const ModelBundle& bundle, const Script& steps, CoordinatorOptions options = {}) {
  Run r{build_coordinator(bundle, options), {}, {}};
  r.trace = r.coord.start();
  r.report = r.coord.run_script(steps);
  r.trace.insert(r.trace.end(), r.report.trace.begin(), r.report.trace.end());
  return r;
}

inline EventInstance event(std::optional<std::string> src, std::string dst, std::string name,
                           std::vector<Value> args = {}) {
  EventInstance e;
  if (src) e.source = ObjectRef{*src};
  e.target = ObjectRef{std::move(dst)};
  e.name = std::move(name);
  e.args = std::move(args);
  return e;
}

}  // namespace rxm::testing
