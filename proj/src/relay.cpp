#include "nfb/relay.hpp"

#include <algorithm>

namespace nfb {

int ObserverQueue::priority(MessageType type) {
  switch (type) {
    case MessageType::EegFrame:
    case MessageType::AttentionSample:
      return 0;
    case MessageType::GameProgress:
      return 1;
    default:
      return 2;
  }
}

bool ObserverQueue::drop_oldest_with(int p) {
  auto it = std::find_if(items_.begin(), items_.end(), [p](const Item& i) { return i.priority == p; });
  if (it == items_.end()) return false;
  items_.erase(it);
  return true;
}

void ObserverQueue::push(MessageType type, std::string line) {
  if (capacity_ == 0) {
    ++dropped_;
    return;
  }
  const int p = priority(type);
  while (items_.size() >= capacity_) {
    ++dropped_;
    if (drop_oldest_with(0) || drop_oldest_with(1)) continue;
    if (p < 2) return;  // never evict a critical message for a droppable one
    items_.pop_front();
    ++dropped_critical_;
  }
  items_.push_back({p, std::move(line)});
}

std::optional<std::string> ObserverQueue::pop() {
  if (items_.empty()) return std::nullopt;
  std::string line = std::move(items_.front().line);
  items_.pop_front();
  return line;
}

bool SeqTracker::observe(std::int64_t seq) {
  if (last && seq <= *last) {
    ++out_of_order;
    return false;
  }
  if (last && seq > *last + 1) {
    ++gaps;
    missing += static_cast<std::uint64_t>(seq - *last - 1);
  }
  last = seq;
  return true;
}

void ReorderBuffer::deliver(Message msg, std::vector<Message>& out) {
  next_seq_ = msg.seq + 1;
  if (last_t_ && msg.t < *last_t_) {
    ++dropped_;
    return;
  }
  last_t_ = msg.t;
  out.push_back(std::move(msg));
}

void ReorderBuffer::release_ready(std::vector<Message>& out) {
  for (;;) {
    while (!held_.empty() && held_.begin()->first == *next_seq_) {
      auto node = held_.extract(held_.begin());
      deliver(std::move(node.mapped()), out);
    }
    if (held_.empty()) return;
    double oldest = held_.begin()->second.t;
    double newest = oldest;
    for (const auto& [seq, m] : held_) {
      oldest = std::min(oldest, m.t);
      newest = std::max(newest, m.t);
    }
    if (newest - oldest < window_s_) return;
    ++skipped_;
    next_seq_ = held_.begin()->first;
  }
}

std::vector<Message> ReorderBuffer::push(Message msg) {
  std::vector<Message> out;
  if (!next_seq_) next_seq_ = msg.seq;
  if (msg.seq < *next_seq_ || held_.count(msg.seq)) {
    ++dropped_;
    return out;
  }
  if (msg.seq == *next_seq_) {
    deliver(std::move(msg), out);
  } else {
    held_.emplace(msg.seq, std::move(msg));
  }
  release_ready(out);
  return out;
}

std::vector<Message> ReorderBuffer::flush() {
  std::vector<Message> out;
  while (!held_.empty()) {
    if (held_.begin()->first != *next_seq_) ++skipped_;
    auto node = held_.extract(held_.begin());
    deliver(std::move(node.mapped()), out);
  }
  return out;
}

void ReorderBuffer::reset() {
  held_.clear();
  next_seq_.reset();
  last_t_.reset();
}

}  // namespace nfb
