#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ctxrace/config.hpp"
#include "ctxrace/protocol.hpp"

namespace ctxrace {

/// One client connection: owns one environment and answers every request
/// line with exactly one response line.
class Session {
  public:
    explicit Session(const Scenario& scenario);

    /// Never throws on bad input; failures become error responses.
    Response handle(std::string_view line);
    /// handle() encoded, without the trailing newline.
    std::string handle_line(std::string_view line) { return encode(handle(line)); }

    bool closed() const { return closed_; }

  private:
    Response dispatch(const Request& req);

    Scenario scenario_;
    RaceEnv env_;
    bool closed_ = false;
};

/// Serves one session over a pair of descriptors until `close`, end of
/// input, or a write failure.
void serve_fd(const Scenario& scenario, int in_fd, int out_fd);

/// Accepts TCP connections, one thread and one session per connection.
class TcpServer {
  public:
    /// Port 0 picks a free port; see port().
    TcpServer(Scenario scenario, std::uint16_t port, bool any_interface = false);
    ~TcpServer();

    std::uint16_t port() const { return port_; }
    /// Blocks until stop() is called.
    void run();
    /// Safe to call from any thread; closes live connections too.
    void stop();

  private:
    struct Listener;

    Scenario scenario_;
    std::unique_ptr<Listener> listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex mutex_;
    std::set<int> live_;
    std::vector<std::jthread> workers_;
};

}  // namespace ctxrace
