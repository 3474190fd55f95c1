#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nfb/protocol.hpp"

namespace nfb {

// Outbound queue of one observer. When full, the oldest raw-signal message
// (eeg_frame, attention_sample) is dropped first, then the oldest
// game_progress; session, feedback and report messages go only when nothing
// else is left.
class ObserverQueue {
 public:
  explicit ObserverQueue(std::size_t capacity = 1024) : capacity_(capacity) {}

  void push(MessageType type, std::string line);
  std::optional<std::string> pop();
  const std::string* front() const { return items_.empty() ? nullptr : &items_.front().line; }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t dropped_critical() const { return dropped_critical_; }

  // 0 = raw signal, 1 = progress, 2 = everything else.
  static int priority(MessageType type);

 private:
  struct Item {
    int priority;
    std::string line;
  };
  bool drop_oldest_with(int priority);

  std::size_t capacity_;
  std::deque<Item> items_;
  std::uint64_t dropped_{0};
  std::uint64_t dropped_critical_{0};
};

// Per-connection inbound sequence check: reports gaps and repeats.
struct SeqTracker {
  std::optional<std::int64_t> last;
  std::uint64_t gaps{0};
  std::uint64_t missing{0};
  std::uint64_t out_of_order{0};

  // Returns false when seq does not advance past the last one seen.
  bool observe(std::int64_t seq);
};

// Restores sequence order of a headband stream. Contiguous messages pass
// straight through; after a gap, later messages wait until the newest
// buffered timestamp is `window_s` past the oldest waiting one, then the gap
// is skipped. Messages older than what was already delivered (by seq or by
// timestamp) are dropped and counted.
class ReorderBuffer {
 public:
  explicit ReorderBuffer(double window_s = 2.0) : window_s_(window_s) {}

  std::vector<Message> push(Message msg);
  // Release everything held, in order (stream ended).
  std::vector<Message> flush();
  // Start over for a new stream; counters are kept.
  void reset();

  std::size_t held() const { return held_.size(); }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t skipped() const { return skipped_; }

 private:
  void release_ready(std::vector<Message>& out);
  void deliver(Message msg, std::vector<Message>& out);

  double window_s_;
  std::optional<std::int64_t> next_seq_;
  std::optional<double> last_t_;
  std::map<std::int64_t, Message> held_;
  std::uint64_t dropped_{0};
  std::uint64_t skipped_{0};
};

}  // namespace nfb
