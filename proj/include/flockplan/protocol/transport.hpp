#pragma once

// Blocking TCP byte streams carrying length-delimited frames.

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flockplan/protocol/frame.hpp"

namespace flockplan::protocol {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// Accepts "host:port", ":port" and "port".
    static Endpoint parse(const std::string& text);
    std::string str() const;
};

class Connection {
public:
    Connection() = default;
    explicit Connection(int fd) : fd_(fd) {}
    Connection(Connection&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Connection& operator=(Connection&& o) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;
    ~Connection() { close(); }

    bool is_open() const { return fd_ >= 0; }
    void close();
    /// Stops blocked reads from another thread without releasing the socket.
    void shutdown();

    void send(std::span<const std::uint8_t> bytes);
    void send_frame(const Frame& f) { send(encode_frame(f)); }

    /// Bytes of one frame as framed by its length field, CRC unchecked.
    /// Throws Timeout when nothing complete arrives in time, Truncated when the
    /// peer closes mid-frame, Oversize on a length over kMaxPayload and
    /// TransportError on a closed or failed socket.
    std::vector<std::uint8_t> receive_raw(std::chrono::milliseconds timeout);
    Frame receive_frame(std::chrono::milliseconds timeout) { return decode_frame(receive_raw(timeout)); }

    /// Discards whatever is already buffered, such as a reply that arrived
    /// after its request timed out.
    void drain();

private:
    void read_exact(std::uint8_t* out, std::size_t n, std::chrono::steady_clock::time_point deadline,
                    bool frame_started);
    int fd_ = -1;
};

Connection connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

class Listener {
public:
    /// Binds and listens; port 0 picks a free port.
    explicit Listener(const Endpoint& ep);
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener() { close(); }

    std::uint16_t port() const { return port_; }
    /// Waits up to `timeout` for a client; returns a closed Connection when
    /// none arrived.
    Connection accept(std::chrono::milliseconds timeout);
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

} // namespace flockplan::protocol
