#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rxm/error.hpp"
#include "rxm/model_text.hpp"
#include "rxm/session.hpp"

namespace {

struct Options {
  std::vector<std::string> models;
  std::string script;
  std::string trace;
  bool strict = false;
  std::int64_t step_bound = 10000;
  int port = -1;
  bool wall = false;
};

std::optional<rxm::ModelBundle> load(const Options& opt) {
  auto result = rxm::load_models(opt.models);
  if (!result.ok()) {
    for (const auto& e : result.errors) std::cerr << e.format() << "\n";
    return std::nullopt;
  }
  return std::move(*result.value);
}

rxm::CoordinatorOptions coordinator_options(const Options& opt) {
  return {opt.step_bound, opt.strict};
}

int cmd_run(const Options& opt) {
  auto bundle = load(opt);
  if (!bundle) return 2;
  std::ifstream in(opt.script, std::ios::binary);
  if (!in) {
    std::cerr << opt.script << ": cannot read file\n";
    return 2;
  }
  std::ostringstream text;
  text << in.rdbuf();
  auto script = rxm::parse_script(text.str(), *bundle, opt.script);
  if (!script.ok()) {
    for (const auto& e : script.errors) std::cerr << e.format() << "\n";
    return 2;
  }

  rxm::Coordinator coord = rxm::build_coordinator(*bundle, coordinator_options(opt));
  auto entries = coord.start();
  rxm::RunReport report = coord.run_script(*script.value);
  entries.insert(entries.end(), report.trace.begin(), report.trace.end());

  std::ofstream file;
  if (!opt.trace.empty()) {
    file.open(opt.trace, std::ios::binary);
    if (!file) {
      std::cerr << opt.trace << ": cannot write file\n";
      return 2;
    }
  }
  std::ostream& out = opt.trace.empty() ? std::cout : file;
  for (const auto& e : entries) out << rxm::trace_line(e) << "\n";
  out.flush();

  std::size_t failed = 0;
  for (const auto& a : report.asserts) {
    if (!a.passed) {
      ++failed;
      std::cerr << "assertion failed: " << a.step << " (" << a.detail << ")\n";
    }
  }
  for (const auto& e : coord.errors()) std::cerr << "error: " << e << "\n";
  if (coord.halted()) std::cerr << "halted by a violation (strict mode)\n";
  std::cerr << report.asserts.size() - failed << " assertion(s) passed, " << failed << " failed, "
            << coord.violation_count() << " violation(s)\n";

  bool ok = failed == 0 && coord.errors().empty() && !(opt.strict && coord.violation_count() > 0);
  return ok ? 0 : 1;
}

int cmd_repl(const Options& opt) {
  auto bundle = load(opt);
  if (!bundle) return 2;
  rxm::Session session(std::move(*bundle), coordinator_options(opt));
  rxm::Repl repl(session);
  for (const auto& e : session.start_entries()) std::cout << rxm::trace_line(e) << "\n";
  bool tty = ::isatty(STDIN_FILENO);
  auto last = std::chrono::steady_clock::now();
  std::string line;
  while (!repl.finished()) {
    if (tty) std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (opt.wall) {
      auto now = std::chrono::steady_clock::now();
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - last).count();
      last += std::chrono::milliseconds(ms);
      if (ms > 0) std::cout << repl.handle("tick " + std::to_string(ms));
    }
    std::cout << repl.handle(line) << std::flush;
  }
  return 0;
}

int cmd_serve(const Options& opt) {
  auto bundle = load(opt);
  if (!bundle) return 2;
  rxm::Session session(std::move(*bundle), coordinator_options(opt));
  rxm::ServeOptions serve;
  serve.wall = opt.wall;
  try {
    if (opt.port >= 0) {
      rxm::serve_tcp(session, opt.port, serve,
                     [](int port) { std::cerr << "listening on 127.0.0.1:" << port << std::endl; });
    } else {
      rxm::serve_stream(session, STDIN_FILENO, STDOUT_FILENO, serve);
    }
  } catch (const rxm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Executes statecharts and live sequence charts together over one object model"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", opt.models, "model files (.rxm)")->required()->expected(1, -1);
    sub->add_option("--step-bound", opt.step_bound, "events allowed per super-step")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--strict", opt.strict, "halt on hot or forbidden violations");
  };
  auto* run = app.add_subcommand("run", "execute a script and write the trace");
  common(run);
  run->add_option("--script", opt.script, "script file (.rxs)")->required();
  run->add_option("--trace", opt.trace, "trace output file (default: stdout)");

  auto* repl = app.add_subcommand("repl", "interactive play-out");
  common(repl);
  repl->add_flag("--wall", opt.wall, "advance the clock with real time");

  auto* serve = app.add_subcommand("serve", "NDJSON session over stdio or TCP");
  common(serve);
  serve->add_option("--port", opt.port, "listen on a local TCP port instead of stdio")
      ->check(CLI::Range(0, 65535));
  serve->add_flag("--wall", opt.wall, "advance the clock with real time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(opt);
    if (*repl) return cmd_repl(opt);
    return cmd_serve(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
