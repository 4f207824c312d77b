#include <gtest/gtest.h>
#include <unistd.h>

#include <thread>

#include "rxm/session.hpp"
#include "testing.hpp"

namespace rxm {
namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

TEST(Repl, InjectPrintsEntriesAndClock) {
  Session s(testing::load_fixture({"switch_light/stage4.rxm"}), {});
  Repl repl(s);
  auto out = split_lines(repl.handle("inject env switch1.click"));
  ASSERT_GE(out.size(), 2u);
  EXPECT_EQ(out.back(), "quiescent, clock=0");
  EXPECT_NE(out[0].find("\"event\":\"click\""), std::string::npos);
  EXPECT_EQ(s.coordinator().store().get(ObjectRef{"light1"}, "state"), Value("on"));
  EXPECT_EQ(s.trace().size(), out.size() - 1);
}

TEST(Repl, TickAdvancesTheClock) {
  Session s(testing::load_fixture({"switch_light/stage4.rxm"}), {});
  Repl repl(s);
  EXPECT_EQ(repl.handle("tick 1s"), "quiescent, clock=1000\n");
  EXPECT_EQ(repl.handle("tick 250ms"), "quiescent, clock=1250\n");
}

TEST(Repl, StateShowsConfigurationAndProperties) {
  Session s(testing::load_fixture({"railcar/model.rxm", "railcar/platform_manager.rxm"}), {});
  Repl repl(s);
  auto out = split_lines(repl.handle("state pm1"));
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0], "pm1: {main.Idle, entrance.linked, exitSegment.unlinked, board.dark}");
  EXPECT_EQ(repl.handle("state ghost"), "unknown object 'ghost'\n");
  EXPECT_EQ(repl.handle("state term1").rfind("term1: no statechart\n", 0), 0u);
}

TEST(Repl, ChartsAndTrace) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  Repl repl(s);
  EXPECT_EQ(repl.handle("charts"), "no active charts\n");
  repl.handle("inject env a.E1");
  std::string charts = repl.handle("charts");
  EXPECT_NE(charts.find("LSC1#1 cut {"), std::string::npos);
  EXPECT_NE(charts.find("obligation LSC3#2"), std::string::npos);
  EXPECT_EQ(split_lines(repl.handle("trace")).size(), s.trace().size());
}

TEST(Repl, BadInputPrintsUsage) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  Repl repl(s);
  std::string out = repl.handle("launch rockets");
  EXPECT_EQ(out.rfind("unknown command 'launch'\n", 0), 0u);
  EXPECT_NE(out.find(Repl::usage()), std::string::npos);
  out = repl.handle("inject env a.E99");
  EXPECT_EQ(out.rfind("error: ", 0), 0u);
  EXPECT_NE(out.find(Repl::usage()), std::string::npos);
  EXPECT_EQ(repl.handle("state"), "usage: state <object>\n");
  EXPECT_EQ(repl.handle(""), "");
  EXPECT_FALSE(repl.finished());
  repl.handle("quit");
  EXPECT_TRUE(repl.finished());
  EXPECT_TRUE(s.trace().empty());
}

Json parse(const std::string& line) { return Json::parse(line); }

TEST(Protocol, InjectRespondsWithEntriesAndPushesDelta) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  ProtocolHandler h(s);
  auto out = h.handle(R"({"cmd":"inject","src":"env","dst":"a","event":"E1"})");
  Json r = parse(out.response);
  EXPECT_EQ(r["ok"], true);
  std::vector<std::string> names;
  for (const auto& e : r["entries"]) names.push_back(e["event"]);
  EXPECT_EQ(names, (std::vector<std::string>{"E1", "E2", "E3"}));
  EXPECT_EQ(r["entries"][0]["origin"], "env");
  EXPECT_EQ(r["entries"][1]["origin"], "lsc:LSC1#1");
  ASSERT_EQ(out.pushes.size(), 1u);
  Json delta = parse(out.pushes[0]);
  EXPECT_EQ(delta["type"], "delta");
  EXPECT_EQ(delta["entries"], r["entries"]);
  EXPECT_TRUE(delta["changes"].contains("copies"));
}

TEST(Protocol, DefaultSourceIsEnvironmentAndArgsAreDecoded) {
  Session s(testing::load_fixture({"railcar/model.rxm", "railcar/platform_manager.rxm"}), {});
  ProtocolHandler h(s);
  Json r = parse(h.handle(R"({"cmd":"inject","dst":"plat11","event":"setBusy","args":[true]})").response);
  ASSERT_EQ(r["ok"], true) << r.dump();
  EXPECT_EQ(r["entries"][0]["src"], "env");
  EXPECT_EQ(r["entries"][0]["args"], Json::array({true}));
  EXPECT_EQ(s.coordinator().store().get(ObjectRef{"plat11"}, "busy"), Value(true));
}

TEST(Protocol, SnapshotMatchesCoordinator) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  ProtocolHandler h(s);
  auto out = h.handle(R"({"cmd":"snapshot"})");
  Json r = parse(out.response);
  EXPECT_EQ(r["ok"], true);
  EXPECT_EQ(r["snapshot"], s.coordinator().snapshot());
  EXPECT_TRUE(out.pushes.empty());
}

TEST(Protocol, ErrorsKeepTheSessionAlive) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  ProtocolHandler h(s);
  auto check = [&](std::string_view line, std::string_view error) {
    auto out = h.handle(line);
    Json r = parse(out.response);
    EXPECT_EQ(r["ok"], false) << line;
    EXPECT_NE(r["error"].get<std::string>().find(error), std::string::npos) << r.dump();
    EXPECT_TRUE(out.pushes.empty()) << line;
  };
  check("{not json", "parse");
  check("[1,2]", "missing cmd");
  check(R"({"cmd":"dance"})", "unknown command 'dance'");
  check(R"({"cmd":"inject","dst":"a","event":"E77"})", "E77");
  check(R"({"cmd":"inject","dst":"zz","event":"E1"})", "zz");
  check(R"({"cmd":"inject","event":"E1"})", "dst");
  check(R"({"cmd":"inject","dst":"a","event":"E1","args":5})", "args");
  check(R"({"cmd":"tick"})", "ms");
  check(R"({"cmd":"tick","ms":-5})", "");
  EXPECT_EQ(parse(h.handle(R"({"cmd":"inject","dst":"a","event":"E1"})").response)["ok"], true);
}

TEST(Protocol, ResetRestartsTheRun) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  ProtocolHandler h(s);
  h.handle(R"({"cmd":"inject","dst":"a","event":"E1"})");
  h.handle(R"({"cmd":"tick","ms":500})");
  auto out = h.handle(R"({"cmd":"reset"})");
  EXPECT_EQ(parse(out.response)["ok"], true);
  ASSERT_EQ(out.pushes.size(), 1u);
  Json delta = parse(out.pushes[0]);
  EXPECT_EQ(delta["clock"], 0);
  EXPECT_TRUE(s.trace().empty());
  EXPECT_TRUE(s.coordinator().playout().copies().empty());
}

TEST(Protocol, QuietTickPushesOnlyClockChange) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  ProtocolHandler h(s);
  auto out = h.handle(R"({"cmd":"tick","ms":100})");
  EXPECT_EQ(parse(out.response)["entries"], Json::array());
  ASSERT_EQ(out.pushes.size(), 1u);
  Json delta = parse(out.pushes[0]);
  EXPECT_EQ(delta["entries"], Json::array());
  EXPECT_EQ(delta["clock"], 100);
  for (const auto& [key, value] : delta["changes"].items()) EXPECT_EQ(key, "clock");
  // Nothing changes on a zero tick.
  EXPECT_TRUE(h.handle(R"({"cmd":"tick","ms":0})").pushes.empty());
}

TEST(Protocol, AdvanceFiresTimersWithoutResponse) {
  Session s(testing::load_fixture({"railcar/model.rxm", "railcar/platform_manager.rxm"}), {});
  ProtocolHandler h(s);
  std::string text = testing::read_file(testing::fixture("railcar/busy_platforms.rxs"));
  // Drive to the point where the periodic timer is armed.
  Repl repl(s);
  for (const auto& line : split_lines(text)) {
    if (line.rfind("inject", 0) == 0) repl.handle(line);
  }
  auto out = h.advance(1000);
  EXPECT_TRUE(out.response.empty());
  ASSERT_EQ(out.pushes.size(), 1u);
  Json delta = parse(out.pushes[0]);
  ASSERT_FALSE(delta["entries"].empty());
  EXPECT_EQ(delta["entries"][0]["event"], "every(1000)");
}

TEST(Serve, StreamAnswersEachLineInOrder) {
  Session s(testing::load_fixture({"delayed.rxm"}), {});
  int in_pipe[2];
  int out_pipe[2];
  ASSERT_EQ(::pipe(in_pipe), 0);
  ASSERT_EQ(::pipe(out_pipe), 0);
  std::string requests =
      "{\"cmd\":\"inject\",\"dst\":\"a\",\"event\":\"E1\"}\n"
      "garbage\n"
      "{\"cmd\":\"snapshot\"}\n";
  ASSERT_EQ(::write(in_pipe[1], requests.data(), requests.size()), static_cast<ssize_t>(requests.size()));
  ::close(in_pipe[1]);
  std::thread server([&] {
    serve_stream(s, in_pipe[0], out_pipe[1], ServeOptions{});
    ::close(out_pipe[1]);
  });
  std::string output;
  char buf[4096];
  ssize_t n;
  while ((n = ::read(out_pipe[0], buf, sizeof buf)) > 0) output.append(buf, static_cast<std::size_t>(n));
  server.join();
  ::close(in_pipe[0]);
  ::close(out_pipe[0]);

  auto lines = split_lines(output);
  ASSERT_EQ(lines.size(), 4u) << output;
  EXPECT_EQ(parse(lines[0])["ok"], true);
  EXPECT_EQ(parse(lines[1])["type"], "delta");
  EXPECT_EQ(parse(lines[2]), (Json{{"ok", false}, {"error", "parse"}}));
  EXPECT_EQ(parse(lines[3])["snapshot"]["clock"], 0);
}

}  // namespace
}  // namespace rxm
