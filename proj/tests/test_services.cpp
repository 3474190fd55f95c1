#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <future>
#include <thread>

#include "net_client.hpp"
#include "nfb/analytics.hpp"
#include "nfb/services.hpp"

using namespace nfb;
using testnet::TcpClient;
using namespace std::chrono_literals;

namespace {

namespace asio = boost::asio;

RunConfig fast_config() {
  RunConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.ws_listen = "127.0.0.1:0";
  cfg.pipeline.customization_s = 2;
  cfg.pipeline.session.calibration.calibration_duration_s = 20;
  cfg.pipeline.session.calibration.min_samples = 10;
  return cfg;
}

// A Backend running on its own io thread.
class Server {
 public:
  explicit Server(RunConfig cfg = fast_config(), std::filesystem::path out = {})
      : guard_(asio::make_work_guard(io_)), backend_(io_, std::move(cfg), std::move(out)) {
    backend_.listen();
    thread_ = std::thread([this] { io_.run(); });
  }

  template <class F>
  auto call(F f) {
    std::promise<decltype(f())> p;
    auto fut = p.get_future();
    asio::post(io_, [&] { p.set_value(f()); });
    return fut.get();
  }

  ~Server() {
    call([this] { backend_.shutdown("test_end"); return 0; });
    guard_.reset();
    thread_.join();
  }

  unsigned short port() { return call([this] { return backend_.tcp_port(); }); }
  unsigned short ws_port() { return call([this] { return backend_.ws_port(); }); }
  Backend& backend() { return backend_; }

 private:
  asio::io_context io_;
  asio::executor_work_guard<asio::io_context::executor_type> guard_;
  Backend backend_;
  std::thread thread_;
};

bool is_type(const Message& m, MessageType t) { return m.type() == t; }

std::optional<Message> wait_for(TcpClient& c, MessageType t) {
  return c.read_until([t](const Message& m) { return is_type(m, t); });
}

bool is_ack(const Message& m) { return is_type(m, MessageType::Ack); }

void hello(TcpClient& c, const char* role) {
  c.send(HelloBody{role, std::nullopt, std::nullopt});
}

// Waits until the server has consumed everything the client sent so far.
template <class Pred>
bool eventually(Server& s, Pred pred) {
  for (int i = 0; i < 500; ++i) {
    if (s.call(pred)) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return false;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  auto e = parse_endpoint("127.0.0.1:7878");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 7878);
  CHECK(parse_endpoint(":99").host == "0.0.0.0");
  CHECK(parse_endpoint("1234").port == 1234);
  CHECK_THROWS_AS(parse_endpoint("host:99999"), Error);
  CHECK_THROWS_AS(parse_endpoint("host:x"), Error);
}

TEST_CASE("a busy port is a configuration error") {
  Server first;
  RunConfig cfg = fast_config();
  cfg.listen = "127.0.0.1:" + std::to_string(first.port());
  asio::io_context io;
  Backend second(io, cfg, {});
  try {
    second.listen();
    FAIL("expected bind failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Configuration);
  }
}

TEST_CASE("session over TCP: calibration, late join snapshot, threshold rules, disconnect and resume") {
  Server server;
  TcpClient band(server.port());
  hello(band, "headband");
  REQUIRE(band.read_until(is_ack));

  TcpClient early(server.port());
  hello(early, "observer");
  auto snap0 = wait_for(early, MessageType::GameProgress);
  REQUIRE(snap0);
  CHECK(std::get<GameProgressBody>(snap0->body).state_hash.has_value());

  // Customization 0..2, calibration 2..22.
  std::vector<double> sent;
  double t = 0;
  auto push = [&](double index) {
    band.send(AttentionSampleBody{index}, t);
    sent.push_back(index);
    t += 1;
  };
  for (int i = 0; i < 3; ++i) push(10);

  // Thresholds are refused during calibration.
  REQUIRE(eventually(server, [&] { return server.backend().phase() == SessionPhase::Calibration; }));
  early.send(ThresholdSetBody{30, 60, std::nullopt}, 0);
  auto refused = wait_for(early, MessageType::Error);
  REQUIRE(refused);
  CHECK(std::get<ErrorBody>(refused->body).code == "phase_rule");

  for (int i = 0; i < 20; ++i) push(40 + (i % 5) * 3);

  // Calibration starts at t=2; its samples are the ones after that.
  std::vector<AttentionSample> observed_cal;
  std::optional<CalibrateResultBody> result;
  while (!result) {
    auto m = early.read();
    REQUIRE(m);
    if (const auto* s = std::get_if<AttentionSampleBody>(&m->body); s && m->t > 2.0) {
      observed_cal.push_back({m->t, s->index});
    }
    if (const auto* r = std::get_if<CalibrateResultBody>(&m->body)) result = *r;
  }
  const auto ccfg = fast_config().pipeline.session.calibration;
  const auto expected = compute_thresholds(compute_baseline(observed_cal, ccfg), ccfg);
  CHECK(result->samples == static_cast<std::int64_t>(observed_cal.size()));
  CHECK(result->t1 == doctest::Approx(expected.t1).epsilon(1e-9));
  CHECK(result->t2 == doctest::Approx(expected.t2).epsilon(1e-9));

  for (int i = 0; i < 15; ++i) push(30 + i * 3);
  REQUIRE(eventually(server, [&] {
    const auto* p = server.backend().pipeline();
    return p && p->engine().game() && p->engine().game()->raw_accounting().total() == 15;
  }));

  // Late joiner: the first message is a snapshot matching the server state.
  TcpClient late(server.port());
  hello(late, "console");
  auto snap = late.read();
  REQUIRE(snap);
  REQUIRE(is_type(*snap, MessageType::GameProgress));
  const auto& body = std::get<GameProgressBody>(snap->body);
  REQUIRE(body.state_hash.has_value());
  CHECK(*body.state_hash == server.call([&] { return server.backend().state_hash(); }));
  CHECK(snapshot_hash(body) == *body.state_hash);
  CHECK(body.phase == SessionPhase::Training);
  CHECK(body.t1 == doctest::Approx(result->t1));
  REQUIRE(late.read_until(is_ack));

  // Invalid override: error, thresholds unchanged.
  late.send(ThresholdSetBody{70, 40, std::nullopt}, 0);
  auto bad = wait_for(late, MessageType::Error);
  REQUIRE(bad);
  CHECK(std::get<ErrorBody>(bad->body).code == "validation");
  CHECK(std::get<ErrorBody>(bad->body).ref_seq == 1);
  CHECK(server.call([&] { return server.backend().pipeline()->engine().thresholds()->t1; }) ==
        doctest::Approx(result->t1));

  // Valid override is acknowledged and applies from the next sample.
  late.send(ThresholdSetBody{20, 90, std::nullopt}, 0);
  REQUIRE(late.read_until(is_ack));
  push(50);
  auto set = early.read_until([](const Message& m) {
    const auto* b = std::get_if<ThresholdSetBody>(&m.body);
    return b && b->t1 == 20;
  });
  REQUIRE(set);
  CHECK(set->t == doctest::Approx(t - 1));

  // Observers may not send data; the connection stays usable.
  late.send(AttentionSampleBody{50}, 0);
  auto role = wait_for(late, MessageType::Error);
  REQUIRE(role);
  CHECK(std::get<ErrorBody>(role->body).code == "role");
  late.send_line("{\"v\":1,\"type\":\"bogus\",\"t\":0,\"seq\":9,\"body\":{}}\n");
  auto unknown = wait_for(late, MessageType::Error);
  REQUIRE(unknown);
  CHECK(std::get<ErrorBody>(unknown->body).code == "unknown_type");
  late.send_line("not json\n");
  auto malformed = wait_for(late, MessageType::Error);
  REQUIRE(malformed);
  CHECK(std::get<ErrorBody>(malformed->body).code == "malformed_json");
  hello(late, "observer");
  REQUIRE(late.read_until(is_ack));

  // A second headband is turned away.
  TcpClient intruder(server.port());
  hello(intruder, "headband");
  auto busy = wait_for(intruder, MessageType::Error);
  REQUIRE(busy);
  CHECK(std::get<ErrorBody>(busy->body).code == "headband_busy");
  CHECK(intruder.closed_by_peer());

  // Headband loss pauses the session; a reconnect resumes it.
  band.close();
  auto paused = late.read_until([](const Message& m) {
    const auto* c = std::get_if<SessionControlBody>(&m.body);
    return c && c->action == ControlAction::Pause;
  });
  REQUIRE(paused);
  CHECK(std::get<SessionControlBody>(paused->body).reason == "headband_disconnected");
  CHECK(server.call([&] { return server.backend().paused(); }));

  TcpClient band2(server.port());
  hello(band2, "headband");
  REQUIRE(band2.read_until(is_ack));
  band2.send(AttentionSampleBody{55}, 0.0);  // the new stream restarts its clock
  auto resumed = late.read_until([](const Message& m) {
    const auto* c = std::get_if<SessionControlBody>(&m.body);
    return c && c->action == ControlAction::Resume;
  });
  REQUIRE(resumed);
  auto sample = wait_for(late, MessageType::AttentionSample);
  REQUIRE(sample);
  CHECK(sample->t > t - 1);
  CHECK_FALSE(server.call([&] { return server.backend().paused(); }));
}

TEST_CASE("control messages: start needs a headband, stop ends the session with a report") {
  RunConfig cfg = fast_config();
  cfg.auto_start = false;
  Server server(cfg);
  TcpClient console(server.port());
  hello(console, "console");
  REQUIRE(console.read_until(is_ack));
  console.send(SessionControlBody{ControlAction::Start}, 0);
  auto none = wait_for(console, MessageType::Error);
  REQUIRE(none);
  CHECK(std::get<ErrorBody>(none->body).code == "no_headband");

  TcpClient band(server.port());
  hello(band, "headband");
  REQUIRE(band.read_until(is_ack));
  band.send(AttentionSampleBody{50}, 0);
  // No session without a start request.
  CHECK_FALSE(server.call([&] { return server.backend().phase().has_value(); }));

  console.send(SessionControlBody{ControlAction::Start}, 0);
  REQUIRE(console.read_until(is_ack));
  for (int i = 1; i < 30; ++i) band.send(AttentionSampleBody{50}, i);
  REQUIRE(eventually(server, [&] { return server.backend().phase() == SessionPhase::Training; }));
  console.send(SessionControlBody{ControlAction::Pause}, 0);
  REQUIRE(console.read_until(is_ack));
  CHECK(server.call([&] { return server.backend().paused(); }));
  console.send(SessionControlBody{ControlAction::Resume}, 0);
  REQUIRE(console.read_until(is_ack));
  band.send(AttentionSampleBody{50}, 30);
  console.send(SessionControlBody{ControlAction::Stop, std::nullopt, std::nullopt, std::string("facilitator")}, 0);
  auto report = wait_for(console, MessageType::SessionReport);
  REQUIRE(report);
  CHECK(std::get<SessionReportBody>(report->body).end_reason == "facilitator");
  CHECK(server.call([&] { return server.backend().phase(); }) == SessionPhase::Conclusion);
  console.send(SessionControlBody{ControlAction::Pause}, 0);
  auto late_pause = wait_for(console, MessageType::Error);
  REQUIRE(late_pause);
  CHECK(std::get<ErrorBody>(late_pause->body).code == "phase_rule");
}

TEST_CASE("WebSocket observers get the same messages") {
  Server server;
  testnet::WsClient ws(server.ws_port());
  ws.send(HelloBody{"observer", std::nullopt, std::nullopt});
  auto first = ws.read();
  REQUIRE(first);
  CHECK(first->type() == MessageType::GameProgress);
  auto ack = ws.read();
  REQUIRE(ack);
  CHECK(ack->type() == MessageType::Ack);

  TcpClient band(server.port());
  hello(band, "headband");
  REQUIRE(band.read_until(is_ack));
  band.send(AttentionSampleBody{42}, 0);
  bool saw_sample = false;
  for (int i = 0; i < 10 && !saw_sample; ++i) {
    auto m = ws.read();
    REQUIRE(m);
    if (const auto* s = std::get_if<AttentionSampleBody>(&m->body)) saw_sample = s->index == 42;
  }
  CHECK(saw_sample);
}

TEST_CASE("simulated headband end to end, log replays to the live report") {
  const auto dir = std::filesystem::temp_directory_path() / "nfb_services_e2e";
  std::filesystem::remove_all(dir);
  RunConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.ws_listen = "off";
  cfg.set_seed(5);
  Server server(cfg, dir);
  TcpClient watcher(server.port());
  hello(watcher, "observer");

  HeadbandOptions opts;
  opts.server = {"127.0.0.1", server.port()};
  const auto result = run_headband(cfg, opts);
  CHECK(result.saw_report);

  auto report = watcher.read_until([](const Message& m) { return is_type(m, MessageType::SessionReport); }, 30000ms);
  REQUIRE(report);
  const auto live = std::get<SessionReportBody>(report->body);
  CHECK(live.completed);
  CHECK(live.duration_s >= 240);
  CHECK(live.duration_s <= 300);

  // Raw EEG reaches observers decimated.
  const auto paths = server.call([&] { return server.backend().log_paths(); });
  REQUIRE(paths.size() == 1);
  const auto log = read_session_log(paths[0]);
  // The live report went over the wire, so compare in wire form.
  CHECK(body_to_json(finalize_log(log)) == body_to_json(live));
  for (const auto& m : log.messages) CHECK(m.type() != MessageType::EegFrame);
  std::filesystem::remove_all(dir);
}

TEST_CASE("observers receive decimated raw EEG") {
  RunConfig cfg = fast_config();
  Server server(cfg);
  TcpClient watcher(server.port());
  hello(watcher, "observer");
  REQUIRE(watcher.read_until(is_ack));
  HeadbandOptions opts;
  opts.server = {"127.0.0.1", server.port()};
  opts.max_time_s = 3;
  run_headband(cfg, opts);
  auto frame = wait_for(watcher, MessageType::EegFrame);
  REQUIRE(frame);
  const auto& body = std::get<EegFrameBody>(frame->body);
  CHECK(body.sample_rate_hz <= cfg.observer_eeg_rate_hz);
  CHECK(body.channels.size() == 5);
}

TEST_CASE("passthrough headband computes the index on the device") {
  RunConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.ws_listen = "off";
  cfg.device = DeviceMode::Passthrough;
  cfg.set_seed(2);
  Server server(cfg);
  TcpClient watcher(server.port());
  hello(watcher, "observer");
  HeadbandOptions opts;
  opts.server = {"127.0.0.1", server.port()};
  opts.device = DeviceMode::Passthrough;
  const auto result = run_headband(cfg, opts);
  CHECK(result.saw_report);
  auto report = watcher.read_until([](const Message& m) { return is_type(m, MessageType::SessionReport); }, 30000ms);
  REQUIRE(report);
  CHECK(std::get<SessionReportBody>(report->body).completed);
}

TEST_CASE("shutdown stops a running session and writes a final report") {
  const auto dir = std::filesystem::temp_directory_path() / "nfb_services_shutdown";
  std::filesystem::remove_all(dir);
  std::filesystem::path log_path;
  {
    Server server(fast_config(), dir);
    TcpClient band(server.port());
    hello(band, "headband");
    REQUIRE(band.read_until(is_ack));
    for (int i = 0; i < 40; ++i) band.send(AttentionSampleBody{50}, i);
    REQUIRE(eventually(server, [&] { return server.backend().phase() == SessionPhase::Training; }));
    server.call([&] { server.backend().shutdown("interrupted"); return 0; });
    CHECK(band.closed_by_peer());
    log_path = server.call([&] { return server.backend().log_paths().at(0); });
  }
  const auto log = read_session_log(log_path);
  const auto& last = log.messages.back();
  REQUIRE(last.type() == MessageType::SessionReport);
  CHECK(std::get<SessionReportBody>(last.body).end_reason == "interrupted");
  std::filesystem::remove_all(dir);
}
