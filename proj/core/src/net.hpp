#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <string>
#include <string_view>

namespace ctxrace::detail {

/// Owning POSIX file descriptor.
class Socket {
  public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.release()) {}
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    int release();
    void close();

  private:
    int fd_ = -1;
};

/// Throws Error on failure.
Socket connect_tcp(const std::string& host, std::uint16_t port);
/// Binds to 127.0.0.1 unless `any_interface`. Port 0 picks a free port.
Socket listen_tcp(std::uint16_t port, bool any_interface = false);
std::uint16_t local_port(const Socket& s);

/// Buffered newline-delimited reader over a descriptor.
class LineReader {
  public:
    explicit LineReader(int fd, std::size_t max_line = 1 << 20) : fd_(fd), max_line_(max_line) {}

    /// Line without its terminator; nullopt at end of stream. A final
    /// unterminated fragment is returned as a line. Overlong lines are
    /// truncated to `max_line` bytes and the rest discarded.
    std::optional<std::string> next();

  private:
    int fd_;
    std::size_t max_line_;
    std::string buf_;
    std::string truncated_;
    bool discarding_ = false;
    bool eof_ = false;
};

/// Returns false if the peer went away.
bool write_all(int fd, std::string_view data);

/// "host:port" or ":port"/"port" (host defaults to 127.0.0.1). Throws ConfigError.
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view text);

}  // namespace ctxrace::detail
