#include "net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "ctxrace/error.hpp"

namespace ctxrace::detail {

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.release();
    }
    return *this;
}

Socket::~Socket() { close(); }

int Socket::release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
}

void Socket::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw Error("cannot resolve " + host + ": " + ::gai_strerror(rc));
    Socket sock;
    int last_errno = 0;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.valid()) continue;
        if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            sock = std::move(s);
            break;
        }
        last_errno = errno;
    }
    ::freeaddrinfo(res);
    if (!sock.valid())
        throw Error("cannot connect to " + host + ":" + service + ": " + std::strerror(last_errno));
    const int one = 1;
    ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return sock;
}

Socket listen_tcp(std::uint16_t port, bool any_interface) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw Error(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(any_interface ? INADDR_ANY : INADDR_LOOPBACK);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw Error("cannot bind port " + std::to_string(port) + ": " + std::strerror(errno));
    if (::listen(s.fd(), 64) != 0) throw Error(std::string("listen: ") + std::strerror(errno));
    return s;
}

std::uint16_t local_port(const Socket& s) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw Error(std::string("getsockname: ") + std::strerror(errno));
    return ntohs(addr.sin_port);
}

std::optional<std::string> LineReader::next() {
    for (;;) {
        if (!discarding_) {
            if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (buf_.size() > max_line_) {
                truncated_ = buf_.substr(0, max_line_);
                buf_.clear();
                discarding_ = true;
            }
        }
        if (eof_) {
            if (discarding_) {
                discarding_ = false;
                return std::move(truncated_);
            }
            if (buf_.empty()) return std::nullopt;
            std::string line = std::move(buf_);
            buf_.clear();
            return line;
        }
        char chunk[65536];
        const ssize_t n = ::read(fd_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            eof_ = true;
            continue;
        }
        std::string_view data(chunk, static_cast<std::size_t>(n));
        if (discarding_) {
            const auto nl = data.find('\n');
            if (nl == std::string_view::npos) continue;
            discarding_ = false;
            buf_.assign(data.substr(nl + 1));
            return std::move(truncated_);
        }
        buf_.append(data);
    }
}

bool write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == ENOTSOCK) {
            const ssize_t w = ::write(fd, data.data(), data.size());
            if (w < 0 && errno == EINTR) continue;
            if (w <= 0) return false;
            data.remove_prefix(static_cast<std::size_t>(w));
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view text) {
    std::string host = "127.0.0.1";
    std::string_view port_text = text;
    if (const auto colon = text.rfind(':'); colon != std::string_view::npos) {
        if (colon > 0) host = std::string(text.substr(0, colon));
        port_text = text.substr(colon + 1);
    }
    unsigned port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (port_text.empty() || ec != std::errc() || end != port_text.data() + port_text.size() || port > 65535)
        throw ConfigError("invalid endpoint '" + std::string(text) + "'");
    return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace ctxrace::detail
