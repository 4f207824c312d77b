#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxm/coordinator.hpp"
#include "rxm/model_text.hpp"

namespace rxm {

/// A started coordinator plus the trace it has produced so far. Shared by the
/// interactive loop and the NDJSON protocol.
class Session {
 public:
  Session(ModelBundle bundle, CoordinatorOptions options);

  Coordinator& coordinator() { return coord_; }
  const ModelBundle& bundle() const { return bundle_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  const std::vector<TraceEntry>& start_entries() const { return start_entries_; }

  /// Fresh coordinator at clock 0 with machines initialized.
  void reset();

  std::vector<TraceEntry> inject(EventInstance event);
  std::vector<TraceEntry> tick(std::int64_t ms);

 private:
  std::vector<TraceEntry> record(std::vector<TraceEntry> entries);

  ModelBundle bundle_;
  CoordinatorOptions options_;
  Coordinator coord_;
  std::vector<TraceEntry> trace_;
  std::vector<TraceEntry> start_entries_;
};

/// Line-oriented interactive commands: inject, tick, state, charts, trace, quit.
class Repl {
 public:
  explicit Repl(Session& session) : session_(session) {}

  /// Output for one input line, newline-terminated unless empty.
  std::string handle(std::string_view line);
  bool finished() const { return finished_; }

  static std::string usage();

 private:
  std::string run_step(std::string_view line);
  std::string state(std::string_view object) const;
  std::string charts() const;

  Session& session_;
  bool finished_ = false;
};

/// The serve protocol: one JSON request per line, one response per request,
/// plus delta pushes after every super-step that changed something.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(Session& session);

  struct Output {
    std::string response;             // empty for internally generated ticks
    std::vector<std::string> pushes;  // {"type":"delta",...} lines
  };

  Output handle(std::string_view line);

  /// Wall-clock advance requested by the server loop.
  Output advance(std::int64_t ms);

 private:
  Output finish(Json response, const std::vector<TraceEntry>& entries);

  Session& session_;
  Json last_snapshot_;
};

struct ServeOptions {
  bool wall = false;
  std::chrono::milliseconds wall_period{100};
};

/// Runs one protocol session over file descriptors until end of input. A
/// reader thread forwards request lines to the thread that owns the session.
void serve_stream(Session& session, int in_fd, int out_fd, const ServeOptions& options,
                  const std::atomic<bool>* stop = nullptr);

/// Listens on 127.0.0.1:port (0 picks a free port) and serves one client at a
/// time. `on_listen` receives the bound port.
void serve_tcp(Session& session, int port, const ServeOptions& options,
               const std::function<void(int)>& on_listen, const std::atomic<bool>* stop = nullptr);

}  // namespace rxm
