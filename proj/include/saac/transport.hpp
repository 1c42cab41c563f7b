#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "saac/protocol.hpp"

namespace saac::transport {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

enum class ReadStatus { line, timeout, closed, overflow };

struct ReadResult {
  ReadStatus status = ReadStatus::closed;
  std::string line;  // without the LF
};

/// Newline-framed byte stream over a pair of file descriptors (one socket, or
/// stdin/stdout). Reads are bounded by a deadline; writes block.
class FdChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns) : rfd_(read_fd), wfd_(write_fd), owns_(owns) {}
  explicit FdChannel(int socket_fd) : FdChannel(socket_fd, socket_fd, true) {}
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;
  ~FdChannel() { close(); }

  void close() {
    if (!owns_) return;
    if (rfd_ >= 0) ::close(rfd_);
    if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
    rfd_ = wfd_ = -1;
    owns_ = false;
  }

  bool open() const { return rfd_ >= 0 && !eof_; }

  // timeout_ms < 0 waits forever.
  ReadResult read_line(int timeout_ms) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms);
    for (;;) {
      if (auto r = take_buffered()) return *r;
      if (eof_) return {ReadStatus::closed, {}};
      int wait = -1;
      if (timeout_ms >= 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
        if (left <= 0 && timeout_ms > 0) return {ReadStatus::timeout, {}};
        wait = static_cast<int>(std::max<long long>(left, 0));
      }
      pollfd p{rfd_, POLLIN, 0};
      const int n = ::poll(&p, 1, wait);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("poll"));
      }
      if (n == 0) return {ReadStatus::timeout, {}};
      fill();
    }
  }

  // Discards everything already received without waiting.
  int drain() {
    int dropped = 0;
    for (;;) {
      const ReadResult r = read_line(0);
      if (r.status != ReadStatus::line && r.status != ReadStatus::overflow) return dropped;
      ++dropped;
    }
  }

  // Returns false when the peer has gone away.
  bool write_all(std::string_view bytes) {
    while (!bytes.empty()) {
      const ssize_t n = is_socket() ? ::send(wfd_, bytes.data(), bytes.size(), MSG_NOSIGNAL)
                                    : ::write(wfd_, bytes.data(), bytes.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
  }

  bool send(const protocol::Message& m) { return write_all(protocol::encode(m)); }

 private:
  bool is_socket() const {
    if (socket_cached_ < 0) {
      int type = 0;
      socklen_t len = sizeof type;
      socket_cached_ = ::getsockopt(wfd_, SOL_SOCKET, SO_TYPE, &type, &len) == 0 ? 1 : 0;
    }
    return socket_cached_ == 1;
  }

  std::optional<ReadResult> take_buffered() {
    const std::size_t nl = buf_.find('\n', scan_from_);
    if (nl == std::string::npos) {
      scan_from_ = buf_.size();
      if (skipping_) {
        buf_.clear();
        scan_from_ = 0;
      } else if (buf_.size() > protocol::kMaxLineBytes) {
        // Skip the rest of the oversized line.
        buf_.clear();
        scan_from_ = 0;
        skipping_ = true;
        return ReadResult{ReadStatus::overflow, {}};
      }
      return std::nullopt;
    }
    std::string line = buf_.substr(0, nl);
    buf_.erase(0, nl + 1);
    scan_from_ = 0;
    if (skipping_) {
      skipping_ = false;
      return take_buffered();
    }
    if (line.size() > protocol::kMaxLineBytes) return ReadResult{ReadStatus::overflow, {}};
    return ReadResult{ReadStatus::line, std::move(line)};
  }

  void fill() {
    char chunk[65536];
    for (;;) {
      const ssize_t n = ::read(rfd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        eof_ = true;
        return;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
      return;
    }
  }

  int rfd_ = -1;
  int wfd_ = -1;
  bool owns_ = false;
  bool eof_ = false;
  bool skipping_ = false;
  mutable int socket_cached_ = -1;
  std::string buf_;
  std::size_t scan_from_ = 0;
};

// ---------------------------------------------------------------------------
// Sockets
// ---------------------------------------------------------------------------

inline std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>> channel_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw TransportError(errno_text("socketpair"));
  return {std::make_unique<FdChannel>(fds[0]), std::make_unique<FdChannel>(fds[1])};
}

class Listener {
 public:
  // Port 0 picks a free port; see port().
  Listener(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(errno_text("socket"));
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw TransportError("bad bind address: " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 8) != 0) {
      const std::string msg = errno_text("cannot listen on " + host + ":" + std::to_string(port));
      ::close(fd_);
      throw TransportError(msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener() {
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const { return port_; }

  // nullptr on timeout; timeout_ms < 0 waits forever.
  std::unique_ptr<FdChannel> accept(int timeout_ms) {
    for (;;) {
      pollfd p{fd_, POLLIN, 0};
      const int n = ::poll(&p, 1, timeout_ms);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("poll"));
      }
      if (n == 0) return nullptr;
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        throw TransportError(errno_text("accept"));
      }
      const int one = 1;
      ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return std::make_unique<FdChannel>(c);
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

inline std::unique_ptr<FdChannel> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw TransportError("cannot resolve " + host);
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw TransportError(errno_text("socket"));
  }
  if (::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    const std::string msg = errno_text("cannot connect to " + host + ":" + std::to_string(port));
    ::freeaddrinfo(res);
    ::close(fd);
    throw TransportError(msg);
  }
  ::freeaddrinfo(res);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<FdChannel>(fd);
}

}  // namespace saac::transport
