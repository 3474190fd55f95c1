#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nfb/error.hpp"
#include "nfb/protocol.hpp"

namespace nfb {

// session_<YYYYMMDDTHHMMSSZ>_<id>.ndjson
std::string log_file_name(const std::string& session_id, std::chrono::system_clock::time_point when);

// Appends records as protocol messages, one per line, flushed per line so a
// killed process leaves a parseable file.
class SessionLogWriter {
 public:
  SessionLogWriter() = default;
  explicit SessionLogWriter(const std::filesystem::path& path);

  void write(const Record& record);
  void close();
  bool is_open() const { return out_.is_open(); }
  const std::filesystem::path& path() const { return path_; }
  std::int64_t next_seq() const { return seq_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::int64_t seq_{0};
};

// Records encoded as consecutive messages starting at seq 0.
std::string encode_records(const Records& records);

struct SessionLog {
  std::string name;
  std::vector<Message> messages;
};

class CorruptLogError : public Error {
 public:
  CorruptLogError(std::string file, std::vector<std::size_t> lines, const std::string& detail);

  const std::string& file() const { return file_; }
  // 1-based line numbers of the offending lines (empty when the whole file
  // is unusable, e.g. empty).
  const std::vector<std::size_t>& lines() const { return lines_; }

 private:
  std::string file_;
  std::vector<std::size_t> lines_;
};

SessionLog parse_session_log(const std::string& name, const std::string& text);
SessionLog read_session_log(const std::filesystem::path& path);

}  // namespace nfb
