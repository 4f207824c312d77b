#include "rxm/session.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include "rxm/error.hpp"

namespace rxm {

// ---------------------------------------------------------------------------
// Session

Session::Session(ModelBundle bundle, CoordinatorOptions options)
    : bundle_(std::move(bundle)), options_(options), coord_(build_coordinator(bundle_, options_)) {
  start_entries_ = record(coord_.start());
}

void Session::reset() {
  coord_ = build_coordinator(bundle_, options_);
  trace_.clear();
  start_entries_ = record(coord_.start());
}

std::vector<TraceEntry> Session::record(std::vector<TraceEntry> entries) {
  trace_.insert(trace_.end(), entries.begin(), entries.end());
  return entries;
}

std::vector<TraceEntry> Session::inject(EventInstance event) {
  return record(coord_.inject(std::move(event)));
}

std::vector<TraceEntry> Session::tick(std::int64_t ms) { return record(coord_.tick(ms)); }

// ---------------------------------------------------------------------------
// Repl

std::string Repl::usage() {
  return "commands:\n"
         "  inject <src|env> <object>.<event>[(args)]\n"
         "  tick <n>[ms|s]\n"
         "  state <object>\n"
         "  charts\n"
         "  trace\n"
         "  quit\n";
}

std::string Repl::handle(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string word;
  in >> word;
  if (word.empty() || word.starts_with("//")) return {};
  if (word == "quit" || word == "exit") {
    finished_ = true;
    return {};
  }
  if (word == "inject" || word == "tick") return run_step(line);
  if (word == "state") {
    std::string object;
    in >> object;
    if (object.empty()) return "usage: state <object>\n";
    return state(object);
  }
  if (word == "charts") return charts();
  if (word == "trace") {
    std::string out;
    for (const auto& e : session_.trace()) out += trace_line(e) + "\n";
    return out;
  }
  return "unknown command '" + word + "'\n" + usage();
}

std::string Repl::run_step(std::string_view line) {
  auto parsed = parse_script(line, session_.bundle(), "<input>");
  if (!parsed.ok()) {
    std::string out;
    for (const auto& e : parsed.errors) out += "error: " + e.message + "\n";
    return out + usage();
  }
  std::string out;
  Coordinator& coord = session_.coordinator();
  for (const auto& step : *parsed.value) {
    std::vector<TraceEntry> entries;
    std::size_t errors_before = coord.errors().size();
    try {
      if (step.kind == ScriptStep::Kind::inject) {
        EventInstance ev;
        if (step.source) ev.source = ObjectRef{*step.source};
        ev.target = ObjectRef{step.target};
        ev.name = step.name;
        ev.args = step.args;
        entries = session_.inject(std::move(ev));
      } else {
        entries = session_.tick(step.number);
      }
    } catch (const Error& e) {
      out += std::string("error: ") + e.what() + "\n";
      continue;
    }
    for (const auto& e : entries) {
      out += trace_line(e) + "\n";
      for (const auto& v : e.violations) {
        out += "  violation: " + std::string(to_string(v.kind)) + " in " + v.chart + "#" +
               std::to_string(v.copy) + "\n";
      }
    }
    for (std::size_t i = errors_before; i < coord.errors().size(); ++i) {
      out += "error: " + coord.errors()[i] + "\n";
    }
    if (coord.halted()) {
      out += "halted, clock=" + std::to_string(coord.clock()) + "\n";
    } else {
      out += "quiescent, clock=" + std::to_string(coord.clock()) + "\n";
    }
  }
  return out;
}

std::string Repl::state(std::string_view object) const {
  const Coordinator& coord = session_.coordinator();
  const ObjectStore& store = coord.store();
  if (!store.contains(object)) return "unknown object '" + std::string(object) + "'\n";
  std::string out;
  if (const Machine* m = coord.machine(object)) {
    std::string config;
    for (const auto& s : m->configuration()) config += (config.empty() ? "" : ", ") + s;
    out += std::string(object) + ": {" + config + "}\n";
    for (const auto& [name, value] : m->variables()) {
      out += "  var " + name + " = " + value.to_literal() + "\n";
    }
  } else {
    out += std::string(object) + ": no statechart\n";
  }
  ObjectRef ref{std::string(object)};
  const ClassDef& cls = store.class_of(ref);
  for (const auto& p : cls.properties) {
    out += "  " + p.name + " = " + store.get(ref, p.name).to_literal() + "\n";
  }
  return out;
}

std::string Repl::charts() const {
  const Playout& playout = session_.coordinator().playout();
  std::string out;
  for (const auto& copy : playout.copies()) {
    const ChartSpec& spec = copy.spec();
    out += spec.name + "#" + std::to_string(copy.id()) + " cut {";
    for (std::size_t i = 0; i < spec.lifelines.size(); ++i) {
      if (i) out += ", ";
      out += spec.lifelines[i].name + ":" + std::to_string(copy.state().cut[i]);
    }
    out += "}";
    for (const auto& [name, value] : copy.state().bindings) {
      out += " " + name + "=" + value.to_literal();
    }
    out += "\n";
  }
  for (const auto& o : playout.obligations()) {
    out += "obligation " + o.chart + "#" + std::to_string(o.copy) + ": " + o.message->from +
           " -> " + o.message->to + " : " + o.message->name + "\n";
  }
  if (out.empty()) out = "no active charts\n";
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

ProtocolHandler::ProtocolHandler(Session& session)
    : session_(session), last_snapshot_(session.coordinator().snapshot()) {}

ProtocolHandler::Output ProtocolHandler::finish(Json response,
                                                const std::vector<TraceEntry>& entries) {
  Output out;
  if (!response.is_null()) out.response = response.dump();
  Json snap = session_.coordinator().snapshot();
  Json changes = Json::object();
  for (const auto& [key, value] : snap.items()) {
    if (!last_snapshot_.contains(key) || last_snapshot_[key] != value) changes[key] = value;
  }
  if (!entries.empty() || !changes.empty()) {
    Json delta;
    delta["type"] = "delta";
    delta["clock"] = session_.coordinator().clock();
    Json list = Json::array();
    for (const auto& e : entries) list.push_back(to_json(e));
    delta["entries"] = std::move(list);
    delta["changes"] = std::move(changes);
    out.pushes.push_back(delta.dump());
  }
  last_snapshot_ = std::move(snap);
  return out;
}

ProtocolHandler::Output ProtocolHandler::handle(std::string_view line) {
  auto error = [](const std::string& message) {
    Output out;
    out.response = Json{{"ok", false}, {"error", message}}.dump();
    return out;
  };
  Json request = Json::parse(line, nullptr, false);
  if (request.is_discarded()) return error("parse");
  if (!request.is_object() || !request.contains("cmd") || !request["cmd"].is_string()) {
    return error("missing cmd");
  }
  const std::string cmd = request["cmd"].get<std::string>();
  auto entries_json = [](const std::vector<TraceEntry>& entries) {
    Json list = Json::array();
    for (const auto& e : entries) list.push_back(to_json(e));
    return list;
  };

  try {
    if (cmd == "snapshot") {
      Output out;
      out.response = Json{{"ok", true}, {"snapshot", session_.coordinator().snapshot()}}.dump();
      return out;
    }
    if (cmd == "reset") {
      session_.reset();
      const auto& entries = session_.start_entries();
      return finish(Json{{"ok", true}, {"entries", entries_json(entries)}}, entries);
    }
    if (cmd == "inject") {
      auto text = [&](const char* key) -> std::string {
        if (!request.contains(key) || !request[key].is_string()) {
          throw Error(ErrorKind::invalid_argument, std::string("missing string field '") + key + "'");
        }
        return request[key].get<std::string>();
      };
      EventInstance ev;
      std::string src = request.contains("src") ? text("src") : "env";
      if (src != "env") ev.source = ObjectRef{src};
      ev.target = ObjectRef{text("dst")};
      ev.name = text("event");
      if (request.contains("args")) {
        if (!request["args"].is_array()) throw Error(ErrorKind::invalid_argument, "args must be an array");
        for (const auto& a : request["args"]) ev.args.push_back(value_from_json(a));
      }
      auto entries = session_.inject(std::move(ev));
      return finish(Json{{"ok", true}, {"entries", entries_json(entries)}}, entries);
    }
    if (cmd == "tick") {
      if (!request.contains("ms") || !request["ms"].is_number_integer()) {
        return error("tick needs an integer 'ms'");
      }
      auto entries = session_.tick(request["ms"].get<std::int64_t>());
      return finish(Json{{"ok", true}, {"entries", entries_json(entries)}}, entries);
    }
  } catch (const Error& e) {
    return error(e.what());
  } catch (const Json::exception& e) {
    return error(e.what());
  }
  return error("unknown command '" + cmd + "'");
}

ProtocolHandler::Output ProtocolHandler::advance(std::int64_t ms) {
  try {
    auto entries = session_.tick(ms);
    return finish(Json(), entries);
  } catch (const Error&) {
    return {};
  }
}

// ---------------------------------------------------------------------------
// Transport

namespace {

bool write_all(int fd, const std::string& text) {
  std::size_t done = 0;
  while (done < text.size()) {
    ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    done += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

void serve_stream(Session& session, int in_fd, int out_fd, const ServeOptions& options,
                  const std::atomic<bool>* stop) {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool eof = false;

  std::thread reader([&] {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      if (stop && stop->load()) break;
      pollfd pfd{in_fd, POLLIN, 0};
      int ready = ::poll(&pfd, 1, 100);
      if (ready < 0 && errno == EINTR) continue;
      if (ready < 0) break;
      if (ready == 0) continue;
      ssize_t n = ::read(in_fd, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::lock_guard lock(mu);
        lines.push_back(std::move(line));
        cv.notify_one();
      }
    }
    std::lock_guard lock(mu);
    if (!buffer.empty()) lines.push_back(std::move(buffer));
    eof = true;
    cv.notify_one();
  });

  ProtocolHandler handler(session);
  using Clock = std::chrono::steady_clock;
  auto last = Clock::now();
  bool open = true;
  auto emit = [&](const ProtocolHandler::Output& out) {
    if (!out.response.empty()) open = open && write_all(out_fd, out.response + "\n");
    for (const auto& p : out.pushes) open = open && write_all(out_fd, p + "\n");
  };
  auto advance_wall = [&] {
    if (!options.wall) return;
    auto now = Clock::now();
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(now - last).count();
    if (elapsed <= 0) return;
    last += std::chrono::milliseconds(elapsed);
    emit(handler.advance(elapsed));
  };

  while (open) {
    std::optional<std::string> line;
    {
      std::unique_lock lock(mu);
      if (options.wall) {
        cv.wait_for(lock, options.wall_period, [&] { return !lines.empty() || eof; });
      } else {
        cv.wait(lock, [&] { return !lines.empty() || eof; });
      }
      if (!lines.empty()) {
        line = std::move(lines.front());
        lines.pop_front();
      } else if (eof) {
        break;
      }
    }
    advance_wall();
    if (line && !line->empty()) emit(handler.handle(*line));
  }
  reader.join();
}

void serve_tcp(Session& session, int port, const ServeOptions& options,
               const std::function<void(int)>& on_listen, const std::atomic<bool>* stop) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorKind::invalid_argument, "cannot create socket");
  int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 1) < 0) {
    ::close(fd);
    throw Error(ErrorKind::invalid_argument, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  while (!(stop && stop->load())) {
    pollfd pfd{fd, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) continue;
    serve_stream(session, client, client, options, stop);
    ::close(client);
  }
  ::close(fd);
}

}  // namespace rxm
