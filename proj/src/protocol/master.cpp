#include "flockplan/protocol/master.hpp"

#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace flockplan::protocol {

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Begin: return "begin";
    case EventKind::Send: return "send";
    case EventKind::Reply: return "reply";
    case EventKind::Timeout: return "timeout";
    case EventKind::CrcError: return "crc_error";
    case EventKind::Exception: return "exception";
    case EventKind::Violation: return "violation";
    case EventKind::TransportFailure: return "transport_failure";
    case EventKind::End: return "end";
    case EventKind::Broadcast: return "broadcast";
    }
    return "unknown";
}

bool single_outstanding(const std::vector<MasterEvent>& log) {
    std::optional<std::uint64_t> open;
    std::map<std::uint64_t, bool> closed;
    for (const auto& e : log) {
        if (e.kind == EventKind::Begin) {
            if (open || closed.count(e.transaction)) return false;
            open = e.transaction;
        } else if (e.kind == EventKind::End) {
            if (open != e.transaction) return false;
            closed[e.transaction] = true;
            open.reset();
        } else if (e.kind == EventKind::Broadcast) {
            if (open) return false;
        } else if (open != e.transaction) {
            return false;
        }
    }
    return !open;
}

Master::Master(MasterConfig config) : config_(std::move(config)) {
    if (config_.retries < 0) throw ConfigDomain("retries must be non-negative");
    if (config_.timeout.count() <= 0) throw ConfigDomain("timeout must be positive");
}

void Master::log(std::uint64_t tx, EventKind k, const Frame& f, int attempt) {
    std::lock_guard lock(log_mu_);
    log_.push_back({tx, k, f.address, f.function, attempt, std::chrono::steady_clock::now()});
}

std::vector<MasterEvent> Master::events() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

void Master::clear_events() {
    std::lock_guard lock(log_mu_);
    log_.clear();
}

Connection& Master::connection() {
    if (!conn_.is_open()) conn_ = connect_tcp(config_.endpoint, config_.timeout);
    return conn_;
}

Transaction Master::run(const Frame& request) {
    const std::uint64_t tx = next_tx_++;
    log(tx, EventKind::Begin, request, 0);
    Transaction result;
    const auto bytes = encode_frame(request);
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        result.retries = attempt;
        try {
            Connection& c = connection();
            c.drain();
            log(tx, EventKind::Send, request, attempt);
            c.send(bytes);
            Frame reply = decode_frame(c.receive_raw(config_.timeout));
            if (reply.address != request.address) {
                log(tx, EventKind::Violation, reply, attempt);
                result.error = "ProtocolViolation";
                result.message = fmt::format("reply from address {} to a request for {}", reply.address, request.address);
                break;
            }
            if ((reply.function & ~kExceptionBit) != request.function) {
                log(tx, EventKind::Violation, reply, attempt);
                result.error = "ProtocolViolation";
                result.message = fmt::format("reply function 0x{:02x} to request 0x{:02x}", reply.function, request.function);
                break;
            }
            if (reply.is_exception()) {
                log(tx, EventKind::Exception, reply, attempt);
                result.error = "SlaveException";
                result.exception = reply.exception().value_or(ExceptionCode::DeviceFailure);
                result.message = fmt::format("slave {} answered {}", reply.address, to_string(*result.exception));
                break;
            }
            log(tx, EventKind::Reply, reply, attempt);
            result.reply = std::move(reply);
            result.error.clear();
            result.message.clear();
            break;
        } catch (const Timeout&) {
            log(tx, EventKind::Timeout, request, attempt);
            result.error = "Timeout";
            result.message = fmt::format("no reply from address {} after {} attempts", request.address, attempt + 1);
        } catch (const CrcMismatch& e) {
            log(tx, EventKind::CrcError, request, attempt);
            result.error = "CrcMismatch";
            result.message = e.what();
        } catch (const Error& e) {
            // Broken or desynchronised stream: start the next attempt on a fresh connection.
            log(tx, EventKind::TransportFailure, request, attempt);
            conn_.close();
            result.error = e.kind();
            result.message = e.what();
        }
        if (attempt < config_.retries) spdlog::debug("master: retrying address {} ({})", request.address, result.error);
    }
    log(tx, EventKind::End, request, result.retries);
    return result;
}

Transaction Master::try_transact(const Frame& request) {
    if (request.address == kBroadcast) throw ProtocolViolation("broadcast frames get no reply; use broadcast()");
    std::lock_guard lock(queue_);
    return run(request);
}

Frame Master::transact(const Frame& request, int* retries) {
    Transaction t = try_transact(request);
    if (retries) *retries = t.retries;
    if (t.ok()) return *t.reply;
    if (t.exception) throw SlaveException(t.message, static_cast<int>(*t.exception));
    if (t.error == "Timeout") throw Timeout(t.message);
    if (t.error == "CrcMismatch") throw CrcMismatch(t.message);
    if (t.error == "ProtocolViolation") throw ProtocolViolation(t.message);
    throw TransportError(t.message);
}

void Master::broadcast(const Frame& request) {
    if (request.address != kBroadcast) throw ProtocolViolation("broadcast() needs address 0");
    std::lock_guard lock(queue_);
    log(0, EventKind::Broadcast, request, 0);
    connection().send(encode_frame(request));
}

} // namespace flockplan::protocol
