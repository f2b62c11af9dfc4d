#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flockplan/protocol/transport.hpp"

namespace flockplan::protocol {

struct MasterConfig {
    Endpoint endpoint;
    std::chrono::milliseconds timeout{500};
    int retries = 2; // extra attempts after a timeout or CRC error
};

enum class EventKind { Begin, Send, Reply, Timeout, CrcError, Exception, Violation, TransportFailure, End, Broadcast };

const char* to_string(EventKind k);

struct MasterEvent {
    std::uint64_t transaction = 0;
    EventKind kind = EventKind::Begin;
    std::uint8_t address = 0;
    std::uint8_t function = 0;
    int attempt = 0;
    std::chrono::steady_clock::time_point at;
};

/// True when every transaction's events sit between its own Begin and End
/// with nothing from another transaction in between.
bool single_outstanding(const std::vector<MasterEvent>& log);

struct Transaction {
    std::optional<Frame> reply; // empty on failure
    int retries = 0;
    std::string error;          // error kind on failure, e.g. "Timeout"
    std::string message;
    std::optional<ExceptionCode> exception;

    bool ok() const { return reply.has_value(); }
};

/// The one master of a house network. Transactions are serialised: a caller
/// blocks until the transaction ahead of it has its reply or gives up.
class Master {
public:
    explicit Master(MasterConfig config);

    /// Sends and waits for the matching reply, retrying on timeout or CRC
    /// error. Throws Timeout, SlaveException or ProtocolViolation.
    Frame transact(const Frame& request, int* retries = nullptr);
    /// Same, but reports failures in the result instead of throwing.
    Transaction try_transact(const Frame& request);
    /// Broadcast frames get no reply; returns once the frame is sent.
    void broadcast(const Frame& request);

    std::vector<MasterEvent> events() const;
    void clear_events();
    const MasterConfig& config() const { return config_; }

private:
    Transaction run(const Frame& request);
    void log(std::uint64_t tx, EventKind k, const Frame& f, int attempt);
    Connection& connection();

    MasterConfig config_;
    std::mutex queue_; // held for a whole transaction
    Connection conn_;
    std::uint64_t next_tx_ = 1;
    mutable std::mutex log_mu_;
    std::vector<MasterEvent> log_;
};

} // namespace flockplan::protocol
