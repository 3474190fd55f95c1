#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nfb/records.hpp"

namespace nfb {

inline constexpr std::int64_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxLineBytes = 1 << 20;

// Envelope {v, type, t, seq, body}. The type is implied by the body.
struct Message {
  std::int64_t v{kProtocolVersion};
  double t{0.0};
  std::int64_t seq{0};
  Body body;

  MessageType type() const { return type_of(body); }
  bool operator==(const Message&) const = default;
};

// One line of UTF-8 JSON terminated by '\n'. Numbers are written with at most
// 9 significant digits. Throws Error(Encode) when the body violates its schema
// (non-finite numbers, index outside [0,100], ...).
std::string encode(const Message& msg);

// Inverse of encode. Accepts the line with or without its trailing '\n'.
// Unknown fields, unknown types, wrong versions and out-of-range values throw
// ProtocolError.
Message decode(std::string_view line);

nlohmann::json body_to_json(const Body& body);
Body body_from_json(MessageType type, const nlohmann::json& j);

// Hash of a game_progress body with state_hash cleared, over its encoded
// form, so sender and receiver agree on it.
std::string snapshot_hash(const GameProgressBody& body);

// Splits a byte stream into lines. A partial trailing line stays buffered.
// Lines longer than kMaxLineBytes are discarded up to the next newline and
// reported once through take_overflow().
class LineFramer {
 public:
  explicit LineFramer(std::size_t max_line = kMaxLineBytes) : max_line_(max_line) {}

  void feed(std::string_view bytes);
  std::optional<std::string> next_line();
  bool take_overflow();
  std::size_t buffered() const { return buffer_.size() - read_pos_; }

 private:
  std::string buffer_;
  std::size_t read_pos_{0};
  std::size_t max_line_;
  bool discarding_{false};
  bool overflow_{false};
};

}  // namespace nfb
