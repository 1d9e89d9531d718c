#include "ctxrace/server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>

#include "ctxrace/error.hpp"
#include "net.hpp"

namespace ctxrace {

namespace {

constexpr std::size_t kEchoLimit = 256;

std::string echo(std::string_view line) {
    if (line.size() <= kEchoLimit) return std::string(line);
    return std::string(line.substr(0, kEchoLimit)) + "... (" + std::to_string(line.size()) + " bytes)";
}

}  // namespace

Session::Session(const Scenario& scenario) : scenario_(scenario), env_(scenario.make_env()) {}

Response Session::handle(std::string_view line) {
    Request req;
    try {
        req = decode_request(line);
    } catch (const ParseError& e) {
        return ErrorResponse{ErrorCode::parse, std::string(e.what()) + "; received: " + echo(line)};
    } catch (const std::exception& e) {
        return ErrorResponse{ErrorCode::parse, std::string(e.what()) + "; received: " + echo(line)};
    }
    try {
        return dispatch(req);
    } catch (const ConfigError& e) {
        return ErrorResponse{ErrorCode::config, e.what()};
    } catch (const ProtocolError& e) {
        return ErrorResponse{ErrorCode::protocol, e.what()};
    } catch (const std::exception& e) {
        return ErrorResponse{ErrorCode::protocol, std::string("request failed: ") + e.what()};
    }
}

Response Session::dispatch(const Request& req) {
    if (closed_) throw ProtocolError("session is closed");
    if (std::holds_alternative<SpecRequest>(req)) return make_spec(scenario_.env);
    if (const auto* r = std::get_if<ResetRequest>(&req)) {
        const ResetResult res = env_.reset(r->seed, r->context);
        return make_state(res.obs, 0.0, false, res.info, res.context);
    }
    if (const auto* s = std::get_if<StepRequest>(&req)) {
        const StepResult res = env_.step(s->action);
        return make_state(res.obs, res.reward, res.done, res.info, env_.context());
    }
    closed_ = true;
    return ClosedResponse{};
}

void serve_fd(const Scenario& scenario, int in_fd, int out_fd) {
    Session session(scenario);
    detail::LineReader reader(in_fd);
    while (!session.closed()) {
        const auto line = reader.next();
        if (!line) break;
        if (!detail::write_all(out_fd, session.handle_line(*line) + '\n')) break;
    }
}

struct TcpServer::Listener {
    detail::Socket socket;
};

TcpServer::TcpServer(Scenario scenario, std::uint16_t port, bool any_interface)
    : scenario_(std::move(scenario)),
      listener_(std::make_unique<Listener>(Listener{detail::listen_tcp(port, any_interface)})),
      port_(detail::local_port(listener_->socket)) {}

TcpServer::~TcpServer() {
    stop();
    workers_.clear();
}

void TcpServer::run() {
    while (!stopping_) {
        const int fd = ::accept(listener_->socket.fd(), nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            if (stopping_) break;
            continue;
        }
        {
            std::lock_guard lock(mutex_);
            if (stopping_) {
                ::close(fd);
                break;
            }
            live_.insert(fd);
        }
        workers_.emplace_back([this, fd] {
            try {
                serve_fd(scenario_, fd, fd);
            } catch (const std::exception&) {
                // A broken connection only ends its own session.
            }
            std::lock_guard lock(mutex_);
            live_.erase(fd);
            ::close(fd);
        });
    }
    for (auto& w : workers_) {
        if (w.joinable()) w.join();
    }
    workers_.clear();
}

void TcpServer::stop() {
    std::lock_guard lock(mutex_);
    if (stopping_.exchange(true)) return;
    ::shutdown(listener_->socket.fd(), SHUT_RDWR);
    for (int fd : live_) ::shutdown(fd, SHUT_RDWR);
}

}  // namespace ctxrace
