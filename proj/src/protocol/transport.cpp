#include "flockplan/protocol/transport.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

namespace flockplan::protocol {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left > 0 ? static_cast<int>(left) : 0;
}

std::string sys_error(const char* what) { return fmt::format("{}: {}", what, std::strerror(errno)); }

sockaddr_in resolve(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    const std::string host = ep.host.empty() ? "127.0.0.1" : ep.host;
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
        throw TransportError("cannot resolve host " + host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

} // namespace

Endpoint Endpoint::parse(const std::string& text) {
    Endpoint ep;
    std::string port = text;
    if (auto colon = text.rfind(':'); colon != std::string::npos) {
        if (colon > 0) ep.host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    try {
        std::size_t used = 0;
        int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
        ep.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        throw ConfigDomain("bad endpoint '" + text + "', expected host:port");
    }
    return ep;
}

std::string Endpoint::str() const { return fmt::format("{}:{}", host, port); }

Connection& Connection::operator=(Connection&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Connection::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Connection::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Connection::send(std::span<const std::uint8_t> bytes) {
    if (fd_ < 0) throw TransportError("send on a closed connection");
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(sys_error("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

void Connection::read_exact(std::uint8_t* out, std::size_t n, Clock::time_point deadline, bool frame_started) {
    std::size_t got = 0;
    while (got < n) {
        pollfd p{fd_, POLLIN, 0};
        int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r < 0) {
            if (errno == EINTR) continue;
            throw TransportError(sys_error("poll"));
        }
        if (r == 0) throw Timeout("no complete frame before the deadline");
        ssize_t k = ::recv(fd_, out + got, n - got, 0);
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw TransportError(sys_error("recv"));
        }
        if (k == 0) {
            if (frame_started || got > 0) throw Truncated("peer closed the connection mid-frame");
            throw TransportError("peer closed the connection");
        }
        got += static_cast<std::size_t>(k);
    }
}

std::vector<std::uint8_t> Connection::receive_raw(std::chrono::milliseconds timeout) {
    if (fd_ < 0) throw TransportError("receive on a closed connection");
    const auto deadline = Clock::now() + timeout;
    std::vector<std::uint8_t> buf(kHeaderSize);
    read_exact(buf.data(), kHeaderSize, deadline, false);
    const std::size_t len = (static_cast<std::size_t>(buf[2]) << 8) | buf[3];
    if (len > kMaxPayload) throw Oversize(fmt::format("incoming frame declares {} payload bytes", len));
    buf.resize(kHeaderSize + len + kCrcSize);
    read_exact(buf.data() + kHeaderSize, len + kCrcSize, deadline, true);
    return buf;
}

void Connection::drain() {
    if (fd_ < 0) return;
    std::uint8_t scratch[512];
    for (;;) {
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, 0) <= 0 || !(p.revents & POLLIN)) return;
        ssize_t k = ::recv(fd_, scratch, sizeof scratch, MSG_DONTWAIT);
        if (k <= 0) return;
    }
}

Connection connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
    sockaddr_in addr = resolve(ep);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(sys_error("socket"));
    Connection c(fd);
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int r = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (r < 0 && errno != EINPROGRESS) throw TransportError(sys_error(("connect " + ep.str()).c_str()));
    if (r < 0) {
        pollfd p{fd, POLLOUT, 0};
        int k = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (k == 0) throw Timeout("connect to " + ep.str() + " timed out");
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (k < 0 || err != 0) {
            errno = err;
            throw TransportError(sys_error(("connect " + ep.str()).c_str()));
        }
    }
    fcntl(fd, F_SETFL, flags);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return c;
}

Listener::Listener(const Endpoint& ep) {
    sockaddr_in addr = resolve(ep);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(sys_error("socket"));
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        std::string msg = sys_error(("bind " + ep.str()).c_str());
        close();
        throw TransportError(msg);
    }
    if (::listen(fd_, 16) < 0) {
        std::string msg = sys_error("listen");
        close();
        throw TransportError(msg);
    }
    socklen_t len = sizeof addr;
    getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

Connection Listener::accept(std::chrono::milliseconds timeout) {
    if (fd_ < 0) return Connection();
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return Connection();
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) return Connection();
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return Connection(fd);
}

void Listener::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

} // namespace flockplan::protocol
