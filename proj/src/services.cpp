#include "nfb/services.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "nfb/error.hpp"
#include "nfb/simulator.hpp"

namespace nfb {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using asio::ip::tcp;
using boost::system::error_code;

Endpoint parse_endpoint(std::string_view addr) {
  Endpoint e;
  std::string_view port = addr;
  const auto colon = addr.rfind(':');
  if (colon != std::string_view::npos) {
    std::string_view host = addr.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    e.host = host.empty() ? "0.0.0.0" : std::string(host);
    port = addr.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (port.empty() || ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw Error(ErrorCode::Configuration, "invalid address '" + std::string(addr) + "' (expected host:port)");
  }
  e.port = static_cast<unsigned short>(value);
  return e;
}

namespace {

tcp::endpoint resolve(const Endpoint& e) {
  asio::io_context io;
  tcp::resolver resolver(io);
  error_code ec;
  auto results = resolver.resolve(e.host, std::to_string(e.port), ec);
  if (ec || results.empty()) {
    throw Error(ErrorCode::Configuration, "cannot resolve " + e.host + ": " + ec.message());
  }
  return *results.begin();
}

void log_line(const std::string& text) { std::clog << "[nfb] " << text << '\n'; }

}  // namespace

// One connection. Reads are framed by the transport subclass; writes drain
// the bounded queue one message at a time.
class Backend::Peer : public std::enable_shared_from_this<Peer> {
 public:
  enum class Role { Pending, Headband, Observer };

  Peer(Backend& backend, std::size_t capacity, std::string label)
      : backend_(backend), queue_(capacity), label_(std::move(label)) {}
  virtual ~Peer() = default;

  virtual void start() = 0;
  virtual void close() = 0;

  void enqueue(MessageType type, std::string line) {
    if (closed_) return;
    queue_.push(type, std::move(line));
    if (!writing_ && ready_) write_next();
  }

  void close_when_drained() {
    closing_ = true;
    if (!writing_ || !ready_) close();
  }

  std::int64_t next_seq() { return seq_++; }
  bool closed() const { return closed_; }
  const std::string& label() const { return label_; }
  const ObserverQueue& queue() const { return queue_; }

  Role role{Role::Pending};
  SeqTracker in_seq;

 protected:
  void write_next() {
    auto line = queue_.pop();
    if (!line) {
      writing_ = false;
      if (closing_) close();
      return;
    }
    writing_ = true;
    current_ = std::move(*line);
    do_write(current_);
  }

  void on_written(const error_code& ec) {
    if (ec) {
      writing_ = false;
      close();
      return;
    }
    write_next();
  }

  void set_ready() {
    ready_ = true;
    if (!writing_) write_next();
  }

  void notify_closed() { backend_.on_closed(shared_from_this()); }

  virtual void do_write(const std::string& line) = 0;

  Backend& backend_;
  ObserverQueue queue_;
  std::string label_;
  std::string current_;
  std::int64_t seq_{0};
  bool writing_{false};
  bool closing_{false};
  bool closed_{false};
  bool ready_{true};
};

class TcpPeer : public Backend::Peer {
 public:
  TcpPeer(Backend& backend, tcp::socket socket, std::size_t capacity, std::string label)
      : Peer(backend, capacity, std::move(label)), socket_(std::move(socket)) {}

  void start() override { read(); }

  void close() override {
    if (closed_) return;
    closed_ = true;
    error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    notify_closed();
  }

 private:
  void read() {
    auto self = shared_from_this();
    socket_.async_read_some(asio::buffer(buffer_), [this, self](const error_code& ec, std::size_t n) {
      if (ec) {
        close();
        return;
      }
      framer_.feed(std::string_view(buffer_.data(), n));
      while (auto line = framer_.next_line()) {
        if (closed_) return;
        backend_.on_line(self, *line);
      }
      if (framer_.take_overflow() && !closed_) backend_.on_framing_error(self);
      if (!closed_) read();
    });
  }

  void do_write(const std::string& line) override {
    auto self = shared_from_this();
    asio::async_write(socket_, asio::buffer(line),
                      [this, self](const error_code& ec, std::size_t) { on_written(ec); });
  }

  tcp::socket socket_;
  LineFramer framer_;
  std::array<char, 64 * 1024> buffer_{};
};

class WsPeer : public Backend::Peer {
 public:
  WsPeer(Backend& backend, tcp::socket socket, std::size_t capacity, std::string label)
      : Peer(backend, capacity, std::move(label)), ws_(std::move(socket)) {
    ready_ = false;
  }

  void start() override {
    ws_.read_message_max(kMaxLineBytes);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    auto self = shared_from_this();
    ws_.async_accept([this, self](const error_code& ec) {
      if (ec) {
        close();
        return;
      }
      ws_.text(true);
      set_ready();
      read();
    });
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    if (ready_ && !writing_) {
      auto self = shared_from_this();
      ws_.async_close(websocket::close_code::normal, [self](const error_code&) {});
    } else {
      error_code ec;
      beast::get_lowest_layer(ws_).socket().close(ec);
    }
    notify_closed();
  }

 private:
  void read() {
    auto self = shared_from_this();
    ws_.async_read(buffer_, [this, self](const error_code& ec, std::size_t) {
      if (ec) {
        if (!closed_) {
          closed_ = true;
          error_code ignored;
          beast::get_lowest_layer(ws_).socket().close(ignored);
          notify_closed();
        }
        return;
      }
      std::string text = beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      if (!text.empty() && text.back() == '\n') text.pop_back();
      if (!text.empty() && text.back() == '\r') text.pop_back();
      backend_.on_line(self, text);
      if (!closed_) read();
    });
  }

  void do_write(const std::string& line) override {
    auto self = shared_from_this();
    ws_.async_write(asio::buffer(line), [this, self](const error_code& ec, std::size_t) { on_written(ec); });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
};

Backend::Backend(asio::io_context& io, RunConfig cfg, std::filesystem::path out_dir)
    : io_(io),
      cfg_(std::move(cfg)),
      out_dir_(std::move(out_dir)),
      tcp_acceptor_(io),
      ws_acceptor_(io),
      reorder_(cfg_.reorder_window_s) {
  cfg_.validate();
}

Backend::~Backend() {
  shutting_down_ = true;
  error_code ec;
  tcp_acceptor_.close(ec);
  ws_acceptor_.close(ec);
  auto peers = peers_;
  for (const auto& p : peers) p->close();
  writer_.close();
}

void Backend::listen() {
  auto bind = [](tcp::acceptor& acceptor, const std::string& addr) -> unsigned short {
    const tcp::endpoint ep = resolve(parse_endpoint(addr));
    error_code ec;
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      error_code ignored;
      acceptor.close(ignored);
      throw Error(ErrorCode::Configuration, "cannot listen on " + addr + ": " + ec.message());
    }
    return acceptor.local_endpoint().port();
  };
  tcp_port_ = bind(tcp_acceptor_, cfg_.listen);
  if (!cfg_.ws_listen.empty() && cfg_.ws_listen != "off") {
    try {
      ws_port_ = bind(ws_acceptor_, cfg_.ws_listen);
    } catch (...) {
      error_code ignored;
      tcp_acceptor_.close(ignored);
      throw;
    }
    accept_ws();
  }
  accept_tcp();
}

void Backend::accept_tcp() {
  tcp_acceptor_.async_accept([this](const error_code& ec, tcp::socket socket) {
    if (ec) {
      if (!shutting_down_ && ec != asio::error::operation_aborted) accept_tcp();
      return;
    }
    error_code ignored;
    socket.set_option(tcp::no_delay(true), ignored);
    const auto remote = socket.remote_endpoint(ignored);
    auto peer = std::make_shared<TcpPeer>(*this, std::move(socket), cfg_.observer_queue,
                                          "tcp " + remote.address().to_string() + ":" + std::to_string(remote.port()));
    attach(peer);
    accept_tcp();
  });
}

void Backend::accept_ws() {
  ws_acceptor_.async_accept([this](const error_code& ec, tcp::socket socket) {
    if (ec) {
      if (!shutting_down_ && ec != asio::error::operation_aborted) accept_ws();
      return;
    }
    error_code ignored;
    socket.set_option(tcp::no_delay(true), ignored);
    const auto remote = socket.remote_endpoint(ignored);
    auto peer = std::make_shared<WsPeer>(*this, std::move(socket), cfg_.observer_queue,
                                         "ws " + remote.address().to_string() + ":" + std::to_string(remote.port()));
    attach(peer);
    accept_ws();
  });
}

void Backend::attach(const std::shared_ptr<Peer>& peer) {
  if (shutting_down_) {
    peer->close();
    return;
  }
  peers_.insert(peer);
  peer->start();
}

std::size_t Backend::observer_count() const {
  std::size_t n = 0;
  for (const auto& p : peers_) n += p->role == Peer::Role::Observer ? 1 : 0;
  return n;
}

std::optional<SessionPhase> Backend::phase() const {
  if (!pipeline_ || !pipeline_->engine().started()) return std::nullopt;
  return pipeline_->engine().phase();
}

bool Backend::paused() const { return pipeline_ && pipeline_->engine().paused(); }

bool Backend::session_active() const {
  return pipeline_ && pipeline_->engine().started() && pipeline_->engine().phase() != SessionPhase::Conclusion;
}

std::string Backend::state_hash() const {
  if (pipeline_) return pipeline_->engine().state_hash();
  return snapshot_hash(GameProgressBody{});
}

BackendStats Backend::stats() const {
  BackendStats s = stats_;
  s.reorder_dropped = reorder_.dropped();
  s.reorder_skipped = reorder_.skipped();
  for (const auto& p : peers_) s.observer_dropped += p->queue().dropped();
  return s;
}

void Backend::send(const std::shared_ptr<Peer>& peer, double t, Body body) {
  if (peer->closed()) return;
  Message m;
  m.t = t;
  m.seq = peer->next_seq();
  m.body = std::move(body);
  const MessageType type = m.type();
  peer->enqueue(type, encode(m));
}

void Backend::reply_error(const std::shared_ptr<Peer>& peer, std::string code, std::string reason,
                          std::optional<std::int64_t> ref_seq) {
  send(peer, last_t_, ErrorBody{std::move(code), std::move(reason), ref_seq});
}

void Backend::ack(const std::shared_ptr<Peer>& peer, const Message& msg) {
  send(peer, last_t_, AckBody{msg.seq, msg.type()});
}

void Backend::broadcast(const Record& record, bool to_headband) {
  for (const auto& p : peers_) {
    if (p->role == Peer::Role::Observer || (to_headband && p == headband_)) send(p, record.t, record.body);
  }
}

void Backend::emit(Records records) {
  for (auto& r : records) {
    if (writer_.is_open()) writer_.write(r);
    const MessageType type = type_of(r.body);
    const bool to_headband =
        type == MessageType::SessionControl || type == MessageType::SessionReport || type == MessageType::Error;
    broadcast(r, to_headband);
    last_t_ = std::max(last_t_, r.t);
  }
  if (pipeline_ && pipeline_->engine().phase() == SessionPhase::Conclusion && writer_.is_open()) writer_.close();
}

void Backend::on_framing_error(const std::shared_ptr<Peer>& peer) {
  ++stats_.decode_errors;
  reply_error(peer, "framing", "line longer than " + std::to_string(kMaxLineBytes) + " bytes discarded", std::nullopt);
}

void Backend::on_line(const std::shared_ptr<Peer>& peer, std::string_view line) {
  Message msg;
  try {
    msg = decode(line);
  } catch (const ProtocolError& e) {
    ++stats_.decode_errors;
    reply_error(peer, e.reason_code(), e.what(), std::nullopt);
    return;
  }
  const auto gaps = peer->in_seq.gaps;
  const auto missing = peer->in_seq.missing;
  peer->in_seq.observe(msg.seq);
  if (peer->in_seq.gaps != gaps) {
    stats_.seq_gaps += peer->in_seq.gaps - gaps;
    stats_.seq_missing += peer->in_seq.missing - missing;
    log_line(peer->label() + ": seq gap before " + std::to_string(msg.seq) + " (" +
             std::to_string(peer->in_seq.missing - missing) + " missing)");
  }
  on_message(peer, std::move(msg));
}

void Backend::make_observer(const std::shared_ptr<Peer>& peer) {
  peer->role = Peer::Role::Observer;
  GameProgressBody snap;
  if (pipeline_) {
    snap = pipeline_->engine().snapshot();
  } else {
    snap.state_hash = snapshot_hash(snap);
  }
  send(peer, last_t_, std::move(snap));
}

void Backend::on_message(const std::shared_ptr<Peer>& peer, Message msg) {
  const MessageType type = msg.type();
  if (peer->role == Peer::Role::Pending && type != MessageType::Hello) make_observer(peer);
  switch (type) {
    case MessageType::Hello:
      handle_hello(peer, msg);
      return;
    case MessageType::EegFrame:
    case MessageType::AttentionSample:
      if (peer != headband_) {
        reply_error(peer, "role", std::string(to_string(type)) + " is accepted from the headband only", msg.seq);
        return;
      }
      for (auto& m : reorder_.push(std::move(msg))) handle_data(m);
      return;
    case MessageType::ThresholdSet:
      handle_thresholds(peer, msg);
      return;
    case MessageType::SessionControl:
      handle_control(peer, msg);
      return;
    case MessageType::Ack:
    case MessageType::Error:
      return;
    default:
      reply_error(peer, "unsupported", std::string(to_string(type)) + " is sent by the server only", msg.seq);
      return;
  }
}

void Backend::handle_hello(const std::shared_ptr<Peer>& peer, const Message& msg) {
  const auto& hello = std::get<HelloBody>(msg.body);
  if (hello.role == "headband") {
    if (headband_ && headband_ != peer) {
      reply_error(peer, "headband_busy", "a headband is already connected", msg.seq);
      peer->close_when_drained();
      return;
    }
    peer->role = Peer::Role::Headband;
    headband_ = peer;
    ++stats_.headband_connects;
    reorder_.reset();
    stream_restarted_ = true;
    log_line(peer->label() + ": headband connected");
    ack(peer, msg);
    if (cfg_.auto_start && !session_active()) start_requested_ = true;
    return;
  }
  if (hello.role == "observer" || hello.role == "console") {
    if (peer == headband_) {
      reply_error(peer, "role", "the headband connection cannot become an observer", msg.seq);
      return;
    }
    if (peer->role != Peer::Role::Observer) make_observer(peer);
    ack(peer, msg);
    return;
  }
  reply_error(peer, "schema", "unknown role '" + hello.role + "'", msg.seq);
}

void Backend::begin_session(double t) {
  start_requested_ = false;
  paused_by_disconnect_ = false;
  PipelineConfig pc = cfg_.pipeline;
  if (stats_.sessions_started > 0) pc.session.session_id += "-" + std::to_string(stats_.sessions_started + 1);
  pipeline_.emplace(pc);
  ++stats_.sessions_started;
  if (!out_dir_.empty()) {
    std::filesystem::create_directories(out_dir_);
    const auto path = out_dir_ / log_file_name(pc.session.session_id, std::chrono::system_clock::now());
    writer_ = SessionLogWriter(path);
    log_paths_.push_back(path);
  }
  last_t_ = t;
  emit(pipeline_->start(t));
  if (cfg_.manual_thresholds) {
    emit(pipeline_->request_thresholds(t, cfg_.manual_thresholds->first, cfg_.manual_thresholds->second));
  }
}

void Backend::forward_eeg(const EegFrame& frame, double sample_rate_hz) {
  if (observer_count() == 0 || frame.block_len() == 0) return;
  const auto step =
      static_cast<std::size_t>(std::max(1.0, std::ceil(sample_rate_hz / cfg_.observer_eeg_rate_hz - 1e-9)));
  EegFrameBody body;
  body.sample_rate_hz = sample_rate_hz / static_cast<double>(step);
  for (const auto& ch : frame.channels) {
    std::vector<double> out;
    out.reserve(ch.size() / step + 1);
    for (std::size_t i = 0; i < ch.size(); i += step) out.push_back(ch[i]);
    body.channels.push_back(std::move(out));
  }
  const Record r{frame.t, std::move(body)};
  broadcast(r, false);
}

void Backend::handle_data(const Message& msg) {
  double t = msg.t + time_offset_;
  if (stream_restarted_) {
    stream_restarted_ = false;
    if (session_active()) {
      if (t <= last_t_) {
        time_offset_ = last_t_ + cfg_.pipeline.dsp.hop_s - msg.t;
        t = msg.t + time_offset_;
      }
      pipeline_->reset_stream();
      if (paused_by_disconnect_ && pipeline_->engine().paused()) {
        paused_by_disconnect_ = false;
        emit(pipeline_->resume(t));
      }
    }
  }
  if (!session_active() && start_requested_) {
    time_offset_ = 0.0;
    t = msg.t;
    begin_session(t);
  }
  try {
    if (const auto* f = std::get_if<EegFrameBody>(&msg.body)) {
      const auto& dsp = cfg_.pipeline.dsp;
      if (f->channels.size() != static_cast<std::size_t>(dsp.channel_count) ||
          std::abs(f->sample_rate_hz - dsp.sample_rate_hz) > 1e-9) {
        if (headband_) {
          reply_error(headband_, "range", "eeg_frame must carry " + std::to_string(dsp.channel_count) +
                                              " channels at the configured sample rate", msg.seq);
        }
        return;
      }
      const EegFrame frame{t, f->channels};
      forward_eeg(frame, f->sample_rate_hz);
      if (session_active()) emit(pipeline_->on_frame(frame));
      last_t_ = std::max(last_t_, t + static_cast<double>(frame.block_len()) / dsp.sample_rate_hz);
    } else if (const auto* s = std::get_if<AttentionSampleBody>(&msg.body)) {
      if (session_active()) emit(pipeline_->on_sample({t, s->index}));
      last_t_ = std::max(last_t_, t);
    }
  } catch (const Error& e) {
    if (headband_) reply_error(headband_, std::string(to_string(e.code())), e.what(), msg.seq);
  }
}

void Backend::handle_thresholds(const std::shared_ptr<Peer>& peer, const Message& msg) {
  const auto& body = std::get<ThresholdSetBody>(msg.body);
  if (!session_active()) {
    reply_error(peer, "phase_rule", "no running session", msg.seq);
    return;
  }
  try {
    emit(pipeline_->request_thresholds(last_t_, body.t1, body.t2));
    ack(peer, msg);
  } catch (const Error& e) {
    reply_error(peer, std::string(to_string(e.code())), e.what(), msg.seq);
  }
}

void Backend::handle_control(const std::shared_ptr<Peer>& peer, const Message& msg) {
  const auto& body = std::get<SessionControlBody>(msg.body);
  try {
    switch (body.action) {
      case ControlAction::Start:
        if (session_active()) throw Error(ErrorCode::PhaseRule, "a session is already running");
        if (!headband_) {
          reply_error(peer, "no_headband", "no headband connected", msg.seq);
          return;
        }
        start_requested_ = true;
        break;
      case ControlAction::Pause:
        if (!session_active()) throw Error(ErrorCode::PhaseRule, "no running session");
        emit(pipeline_->pause(last_t_, body.reason.value_or("facilitator")));
        break;
      case ControlAction::Resume:
        if (!session_active()) throw Error(ErrorCode::PhaseRule, "no running session");
        if (!headband_) {
          reply_error(peer, "no_headband", "no headband connected", msg.seq);
          return;
        }
        paused_by_disconnect_ = false;
        emit(pipeline_->resume(last_t_));
        break;
      case ControlAction::Stop:
        if (!session_active()) throw Error(ErrorCode::PhaseRule, "no running session");
        emit(pipeline_->stop(last_t_, body.reason.value_or("facilitator")));
        break;
      case ControlAction::Phase:
        reply_error(peer, "unsupported", "phases follow the session timeline", msg.seq);
        return;
    }
    ack(peer, msg);
  } catch (const Error& e) {
    reply_error(peer, std::string(to_string(e.code())), e.what(), msg.seq);
  }
}

void Backend::on_closed(const std::shared_ptr<Peer>& peer) {
  stats_.observer_dropped += peer->queue().dropped();
  peers_.erase(peer);
  if (peer == headband_) {
    log_line(peer->label() + ": headband disconnected");
    for (auto& m : reorder_.flush()) handle_data(m);
    headband_.reset();
    reorder_.reset();
    start_requested_ = false;
    if (session_active() && !shutting_down_ && !pipeline_->engine().paused()) {
      emit(pipeline_->pause(last_t_, "headband_disconnected"));
      paused_by_disconnect_ = true;
    }
  }
  if (shutting_down_ && peers_.empty() && shutdown_timer_) shutdown_timer_->cancel();
}

void Backend::shutdown(const std::string& reason) {
  if (shutting_down_) return;
  if (session_active()) emit(pipeline_->stop(last_t_, reason));
  shutting_down_ = true;
  writer_.close();
  error_code ec;
  tcp_acceptor_.close(ec);
  ws_acceptor_.close(ec);
  auto peers = peers_;
  for (const auto& p : peers) p->close_when_drained();
  if (!peers_.empty()) {
    shutdown_timer_.emplace(io_, std::chrono::seconds(1));
    shutdown_timer_->async_wait([this](const error_code&) {
      auto remaining = peers_;
      for (const auto& p : remaining) p->close();
    });
  }
}

DeviceIndexer::DeviceIndexer(DspConfig dsp, double reference_s)
    : tracker_(dsp), dsp_(dsp), reference_s_(reference_s) {}

std::vector<AttentionSample> DeviceIndexer::push(const EegFrame& frame) {
  if (!start_t_) start_t_ = frame.t;
  std::vector<AttentionSample> out;
  for (const auto& p : tracker_.push(frame)) {
    if (count_ == 0 || p.t <= *start_t_ + reference_s_ + 1e-9) {
      sum_ += p.power;
      ++count_;
    }
    out.push_back({p.t, attention_index(p.power, sum_ / static_cast<double>(count_), dsp_)});
  }
  return out;
}

HeadbandResult run_headband(const RunConfig& cfg, const HeadbandOptions& opts, const std::atomic<bool>* stop) {
  cfg.validate();
  HeadbandResult result;
  asio::io_context io;
  tcp::socket socket(io);
  Endpoint target = opts.server;
  if (target.host == "0.0.0.0") target.host = "127.0.0.1";
  error_code ec;
  socket.connect(resolve(target), ec);
  if (ec) throw Error(ErrorCode::Configuration, "cannot connect to " + target.host + ":" +
                                                    std::to_string(target.port) + ": " + ec.message());
  socket.set_option(tcp::no_delay(true), ec);

  std::int64_t seq = 0;
  auto send = [&](double t, Body body) {
    Message m;
    m.t = t;
    m.seq = seq++;
    m.body = std::move(body);
    asio::write(socket, asio::buffer(encode(m)));
    ++result.messages_sent;
  };

  LineFramer framer;
  std::array<char, 16 * 1024> buffer{};
  auto drain = [&] {
    for (;;) {
      error_code rec;
      const std::size_t available = socket.available(rec);
      if (rec || available == 0) return;
      const std::size_t n = socket.read_some(asio::buffer(buffer), rec);
      if (rec) return;
      framer.feed(std::string_view(buffer.data(), n));
      while (auto line = framer.next_line()) {
        try {
          if (decode(*line).type() == MessageType::SessionReport) result.saw_report = true;
        } catch (const ProtocolError&) {
        }
      }
    }
  };

  send(0.0, HelloBody{"headband", std::string(to_string(opts.device)), std::nullopt});

  const auto& dsp = cfg.pipeline.dsp;
  EegSimulator sim(cfg.profile, dsp, cfg.simulator);
  DeviceIndexer indexer(dsp, cfg.pipeline.customization_s);
  const auto wall_start = std::chrono::steady_clock::now();
  try {
    while (!(stop && stop->load())) {
      const EegFrame frame = sim.next_frame();
      if (frame.t >= opts.max_time_s) break;
      if (opts.disconnect_at_s && frame.t >= *opts.disconnect_at_s) break;
      if (opts.speed > 0) {
        std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                       std::chrono::duration<double>(frame.t / opts.speed)));
      }
      if (opts.device == DeviceMode::Simulator) {
        send(frame.t, EegFrameBody{dsp.sample_rate_hz, frame.channels});
      } else {
        for (const auto& s : indexer.push(frame)) send(s.t, AttentionSampleBody{s.index});
      }
      result.last_t = frame.t;
      drain();
      if (result.saw_report) break;
    }
  } catch (const boost::system::system_error&) {
    // Server went away; what was sent stands.
  }
  socket.shutdown(tcp::socket::shutdown_both, ec);
  socket.close(ec);
  return result;
}

}  // namespace nfb
