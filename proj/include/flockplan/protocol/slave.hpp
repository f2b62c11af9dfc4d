#pragma once

// Slave side of the house network: request handling against a device, the
// switch tree that carries frames to the houses, and a TCP server exposing
// the tree's root to one master.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "flockplan/protocol/payload.hpp"
#include "flockplan/protocol/transport.hpp"

namespace flockplan::protocol {

/// What a house exposes to the network. Calls may come from the server
/// thread while the simulation ticks, so implementations lock their state.
class Device {
public:
    virtual ~Device() = default;
    virtual Telemetry telemetry() = 0;
    virtual StatusReport status() = 0;
    /// Stores the plan for its day; returns the refusal code, if any.
    virtual std::optional<ExceptionCode> write_plan(const PlanMessage& m) = 0;
    virtual std::optional<PlanMessage> read_plan(std::uint16_t day) = 0;
    virtual std::optional<ExceptionCode> inject_mortality(const MortalityMessage& m) = 0;
};

/// Answers one request on behalf of the slave at `address`. Frames for other
/// addresses get no reply, nor do broadcasts (which only WRITE_DAY_PLAN may
/// use; other broadcast functions are ignored).
std::optional<Frame> slave_handle(Device& device, std::uint8_t address, const Frame& request);

struct Delivery {
    std::vector<std::vector<std::uint8_t>> replies; // encoded
    int leaves = 0;                                 // slaves that acted on the frame
};

class Node {
public:
    virtual ~Node() = default;
    virtual void deliver(const Frame& f, Delivery& out) = 0;
    virtual std::set<std::uint8_t> addresses() const = 0;
};

/// Injected faults, consumed one request at a time.
struct FaultPlan {
    int drop_next = 0;    // swallow the request, no reply
    int corrupt_next = 0; // flip one bit of the reply
};

class Slave : public Node {
public:
    Slave(std::uint8_t address, std::shared_ptr<Device> device);

    std::uint8_t address() const { return address_; }
    void deliver(const Frame& f, Delivery& out) override;
    std::set<std::uint8_t> addresses() const override { return {address_}; }

    void inject(const FaultPlan& faults);
    /// Requests addressed to this slave, dropped ones included.
    long requests_seen() const { return seen_.load(); }

private:
    std::uint8_t address_;
    std::shared_ptr<Device> device_;
    std::mutex mu_; // one request at a time
    FaultPlan faults_;
    std::atomic<long> seen_{0};
};

/// Inner node of the network tree. Unicast frames descend only into the
/// branch holding their address; broadcasts reach every leaf.
class Switch : public Node {
public:
    /// Throws AddressCollision when the child repeats an address already
    /// reachable from this switch.
    void attach(std::shared_ptr<Node> child);
    void deliver(const Frame& f, Delivery& out) override;
    std::set<std::uint8_t> addresses() const override;

private:
    std::vector<std::shared_ptr<Node>> children_;
};

/// Accepts master connections and feeds their frames to `root`. Frames that
/// fail the CRC are dropped without a reply, as a serial slave would.
class BusServer {
public:
    BusServer(std::shared_ptr<Node> root, const Endpoint& ep);
    ~BusServer() { stop(); }
    BusServer(const BusServer&) = delete;
    BusServer& operator=(const BusServer&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    Endpoint endpoint() const;
    void stop();

private:
    void accept_loop();
    void serve(std::shared_ptr<Connection> c);

    std::shared_ptr<Node> root_;
    Listener listener_;
    std::string host_;
    std::atomic<bool> stop_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::vector<std::shared_ptr<Connection>> connections_;
};

} // namespace flockplan::protocol
