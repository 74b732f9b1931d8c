#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace texmesh {

/// Append-only record file. Each record is framed as
///   [u32 little-endian payload length][u32 crc32 of payload][payload]
/// and flushed to stable storage before append() returns.
class EventLog {
 public:
  struct Scan {
    std::vector<std::string> records;
    std::uint64_t valid_bytes = 0;   // prefix holding whole, checksummed records
    std::uint64_t dropped_bytes = 0; // torn or corrupt tail after that prefix
  };

  /// Reads every whole record; stops at the first torn or corrupt one.
  /// A missing file scans as empty.
  static Scan scan(const std::filesystem::path& path);

  /// Opens for appending after truncating any torn tail found by scan().
  explicit EventLog(const std::filesystem::path& path, bool sync = true);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Records present when the log was opened.
  const Scan& recovered() const { return recovered_; }

  void append(const std::string& payload);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  bool sync_;
  std::uint64_t end_ = 0;
  Scan recovered_;
};

std::string frame_record(const std::string& payload);

}  // namespace texmesh
