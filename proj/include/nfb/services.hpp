#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/asio.hpp>

#include "nfb/config.hpp"
#include "nfb/pipeline.hpp"
#include "nfb/relay.hpp"
#include "nfb/session_log.hpp"

namespace nfb {

struct Endpoint {
  std::string host{"127.0.0.1"};
  unsigned short port{0};
};

// "host:port", ":port" or "port". Throws Error(Configuration).
Endpoint parse_endpoint(std::string_view addr);

struct BackendStats {
  std::uint64_t decode_errors{0};
  std::uint64_t seq_gaps{0};
  std::uint64_t seq_missing{0};
  std::uint64_t reorder_dropped{0};
  std::uint64_t reorder_skipped{0};
  std::uint64_t observer_dropped{0};
  std::uint64_t sessions_started{0};
  std::uint64_t headband_connects{0};
};

// The session server: one headband and any number of observers over NDJSON
// TCP, the same messages over WebSocket (one message per text frame). All
// state lives on the io_context thread that runs it; the public accessors
// must be called from that thread (e.g. through asio::post).
class Backend {
 public:
  Backend(boost::asio::io_context& io, RunConfig cfg, std::filesystem::path out_dir);
  ~Backend();
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  // Binds both listeners and starts accepting. Throws Error(Configuration)
  // when an address cannot be bound (e.g. port busy).
  void listen();
  unsigned short tcp_port() const { return tcp_port_; }
  unsigned short ws_port() const { return ws_port_; }

  // Stops a running session, flushes its log and closes every connection.
  void shutdown(const std::string& reason = "shutdown");

  bool headband_connected() const { return headband_ != nullptr; }
  std::size_t observer_count() const;
  std::optional<SessionPhase> phase() const;
  bool paused() const;
  // Hash of the snapshot a joining observer would receive now.
  std::string state_hash() const;
  const std::vector<std::filesystem::path>& log_paths() const { return log_paths_; }
  const SessionPipeline* pipeline() const { return pipeline_ ? &*pipeline_ : nullptr; }
  BackendStats stats() const;

  class Peer;

 private:
  friend class Peer;
  friend class TcpPeer;
  friend class WsPeer;

  void accept_tcp();
  void accept_ws();
  void attach(const std::shared_ptr<Peer>& peer);
  void on_line(const std::shared_ptr<Peer>& peer, std::string_view line);
  void on_message(const std::shared_ptr<Peer>& peer, Message msg);
  void on_closed(const std::shared_ptr<Peer>& peer);
  void on_framing_error(const std::shared_ptr<Peer>& peer);

  void handle_hello(const std::shared_ptr<Peer>& peer, const Message& msg);
  void handle_data(const Message& msg);
  void handle_thresholds(const std::shared_ptr<Peer>& peer, const Message& msg);
  void handle_control(const std::shared_ptr<Peer>& peer, const Message& msg);
  void make_observer(const std::shared_ptr<Peer>& peer);

  void begin_session(double t);
  bool session_active() const;
  void emit(Records records);
  void broadcast(const Record& record, bool to_headband);
  void send(const std::shared_ptr<Peer>& peer, double t, Body body);
  void reply_error(const std::shared_ptr<Peer>& peer, std::string code, std::string reason,
                   std::optional<std::int64_t> ref_seq);
  void ack(const std::shared_ptr<Peer>& peer, const Message& msg);
  void forward_eeg(const EegFrame& frame, double sample_rate_hz);

  boost::asio::io_context& io_;
  RunConfig cfg_;
  std::filesystem::path out_dir_;
  boost::asio::ip::tcp::acceptor tcp_acceptor_;
  boost::asio::ip::tcp::acceptor ws_acceptor_;
  unsigned short tcp_port_{0};
  unsigned short ws_port_{0};
  bool shutting_down_{false};
  std::optional<boost::asio::steady_timer> shutdown_timer_;

  std::set<std::shared_ptr<Peer>> peers_;
  std::shared_ptr<Peer> headband_;

  std::optional<SessionPipeline> pipeline_;
  SessionLogWriter writer_;
  std::vector<std::filesystem::path> log_paths_;
  ReorderBuffer reorder_;
  bool start_requested_{false};
  bool paused_by_disconnect_{false};
  bool stream_restarted_{false};
  double time_offset_{0.0};
  double last_t_{0.0};
  BackendStats stats_;
};

struct HeadbandOptions {
  Endpoint server{};
  DeviceMode device{DeviceMode::Simulator};
  // Playback speed relative to real time; 0 streams as fast as the server
  // accepts.
  double speed{0.0};
  // Stop streaming after this much simulated time.
  double max_time_s{1800.0};
  // Close the connection after this much simulated time without stopping
  // the process (used to exercise reconnects).
  std::optional<double> disconnect_at_s;
};

struct HeadbandResult {
  std::uint64_t messages_sent{0};
  bool saw_report{false};
  double last_t{0.0};
};

// A simulated headband: streams eeg_frame (or, in passthrough mode, its own
// attention_sample) messages to a backend until a session_report arrives,
// max_time_s elapses or `stop` becomes true.
HeadbandResult run_headband(const RunConfig& cfg, const HeadbandOptions& opts,
                            const std::atomic<bool>* stop = nullptr);

// Mu power to attention index on the device side, for passthrough mode: the
// reference is the mean power over the first customization_s seconds.
class DeviceIndexer {
 public:
  DeviceIndexer(DspConfig dsp, double reference_s);
  std::vector<AttentionSample> push(const EegFrame& frame);

 private:
  MuPowerTracker tracker_;
  DspConfig dsp_;
  double reference_s_;
  std::optional<double> start_t_;
  double sum_{0.0};
  std::size_t count_{0};
};

}  // namespace nfb
