#include "nfb/session_log.hpp"

#include <ctime>
#include <sstream>

namespace nfb {

std::string log_file_name(const std::string& session_id, std::chrono::system_clock::time_point when) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(when);
  std::tm utc{};
  gmtime_r(&tt, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &utc);
  return "session_" + std::string(stamp) + "_" + session_id + ".ndjson";
}

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out_) throw Error(ErrorCode::Configuration, "cannot open log file " + path.string());
}

void SessionLogWriter::write(const Record& record) {
  if (!out_.is_open()) return;
  out_ << encode(Message{kProtocolVersion, record.t, seq_++, record.body});
  out_.flush();
}

void SessionLogWriter::close() {
  if (out_.is_open()) out_.close();
}

std::string encode_records(const Records& records) {
  std::string out;
  std::int64_t seq = 0;
  for (const auto& r : records) out += encode(Message{kProtocolVersion, r.t, seq++, r.body});
  return out;
}

namespace {

std::string describe(const std::vector<std::size_t>& lines) {
  std::string s;
  for (std::size_t i = 0; i < lines.size() && i < 20; ++i) {
    if (i) s += ",";
    s += std::to_string(lines[i]);
  }
  if (lines.size() > 20) s += ",...";
  return s;
}

}  // namespace

CorruptLogError::CorruptLogError(std::string file, std::vector<std::size_t> lines, const std::string& detail)
    : Error(ErrorCode::CorruptLog,
            file + ": " + detail + (lines.empty() ? std::string() : " (lines " + describe(lines) + ")")),
      file_(std::move(file)),
      lines_(std::move(lines)) {}

SessionLog parse_session_log(const std::string& name, const std::string& text) {
  SessionLog log;
  log.name = name;
  std::vector<std::size_t> bad;
  std::string first_reason;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    if (!terminated) nl = text.size();
    ++line_no;
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (!terminated && line.empty()) break;
    if (line.empty()) {
      bad.push_back(line_no);
      if (first_reason.empty()) first_reason = "empty line";
      continue;
    }
    try {
      log.messages.push_back(decode(line));
    } catch (const Error& e) {
      bad.push_back(line_no);
      if (first_reason.empty()) first_reason = e.what();
    }
  }
  if (!bad.empty()) throw CorruptLogError(name, std::move(bad), first_reason);
  if (log.messages.empty()) throw CorruptLogError(name, {}, "log is empty");
  return log;
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptLogError(path.string(), {}, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_session_log(path.string(), ss.str());
}

}  // namespace nfb
