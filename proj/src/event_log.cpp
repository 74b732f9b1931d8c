#include "texmesh/event_log.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <fmt/format.h>

#include "texmesh/errors.hpp"

namespace texmesh {
namespace {

constexpr std::uint32_t kMaxRecord = 64u << 20;

std::uint32_t checksum(const char* data, std::size_t size) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

[[noreturn]] void throw_errno(const std::string& what, const std::filesystem::path& path) {
  throw Error(fmt::format("{} '{}': {}", what, path.string(), std::strerror(errno)));
}

}  // namespace

std::string frame_record(const std::string& payload) {
  if (payload.size() > kMaxRecord) throw ValidationError("log record too large");
  std::string out;
  out.reserve(payload.size() + 8);
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  put_u32(out, checksum(payload.data(), payload.size()));
  out += payload;
  return out;
}

EventLog::Scan EventLog::scan(const std::filesystem::path& path) {
  Scan s;
  std::ifstream in(path, std::ios::binary);
  if (!in) return s;
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (data.size() - pos >= 8) {
    const auto len = get_u32(data.data() + pos);
    const auto crc = get_u32(data.data() + pos + 4);
    if (len > kMaxRecord || data.size() - pos - 8 < len) break;
    if (checksum(data.data() + pos + 8, len) != crc) break;
    s.records.emplace_back(data, pos + 8, len);
    pos += 8 + len;
  }
  s.valid_bytes = pos;
  s.dropped_bytes = data.size() - pos;
  return s;
}

EventLog::EventLog(const std::filesystem::path& path, bool sync) : path_(path), sync_(sync) {
  recovered_ = scan(path_);
  const bool fresh = !std::filesystem::exists(path_);
  if (fresh && path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw_errno("cannot open log", path_);
  if (recovered_.dropped_bytes > 0) {
    if (::ftruncate(fd_, static_cast<off_t>(recovered_.valid_bytes)) != 0) throw_errno("cannot truncate log", path_);
    if (sync_ && ::fsync(fd_) != 0) throw_errno("cannot sync log", path_);
  }
  if (::lseek(fd_, static_cast<off_t>(recovered_.valid_bytes), SEEK_SET) < 0) throw_errno("cannot seek log", path_);
  end_ = recovered_.valid_bytes;
  if (fresh && sync_) {
    const auto dir = path_.has_parent_path() ? path_.parent_path() : std::filesystem::path(".");
    const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
      ::fsync(dfd);
      ::close(dfd);
    }
  }
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

void EventLog::append(const std::string& payload) {
  const auto framed = frame_record(payload);
  std::size_t written = 0;
  while (written < framed.size()) {
    const auto n = ::write(fd_, framed.data() + written, framed.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int saved = errno;
      if (::ftruncate(fd_, static_cast<off_t>(end_)) == 0) ::lseek(fd_, static_cast<off_t>(end_), SEEK_SET);
      errno = saved;
      throw_errno("cannot write log", path_);
    }
    written += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) throw_errno("cannot sync log", path_);
  end_ += framed.size();
}

}  // namespace texmesh
