#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flockplan/condosim/house.hpp"
#include "flockplan/protocol/slave.hpp"

namespace flockplan::condosim {

struct CondoConfig {
    int schema_version = 1;
    std::vector<HouseConfig> houses;
    dataset::GeneratorConfig generator;
    /// Wall-clock length of one simulated day when ticking on a timer.
    int tick_ms = 1000;
    std::uint64_t seed = 1;
    std::uint32_t first_flock_id = 1;
    /// Houses per branch switch of the network tree.
    int branch_size = 4;

    /// Houses at addresses 1..n cycling through the default house specs.
    static CondoConfig default_condo(int n = 3);
    /// Throws ConfigDomain on an empty condominium and AddressCollision on a
    /// repeated or reserved address.
    void validate() const;
};

void to_json(nlohmann::json& j, const CondoConfig& c);
void from_json(const nlohmann::json& j, CondoConfig& c);

/// Seed of a house's flock when the house config leaves it at 0.
std::uint64_t flock_seed(std::uint64_t condo_seed, std::uint32_t flock_id);

/// A condominium of houses, each reachable as a protocol slave. Houses start
/// their flocks together and advance together, one day per tick.
class Condominium {
public:
    explicit Condominium(CondoConfig config);
    ~Condominium();
    Condominium(const Condominium&) = delete;
    Condominium& operator=(const Condominium&) = delete;

    /// Rebuilds a condominium mid-flock from snapshot(); continuing it gives
    /// the same days the original would have produced.
    static std::unique_ptr<Condominium> from_snapshot(const nlohmann::json& snapshot);

    const CondoConfig& config() const { return config_; }
    std::vector<std::uint8_t> addresses() const;

    /// Steps every house with a running flock; returns the outcomes by address.
    std::map<std::uint8_t, DayOutcome> advance_day();
    /// Starts a fresh flock in every house with the next flock ids.
    void restock();

    /// Starts a timer thread calling advance_day every tick_ms until stop().
    void start_ticking();
    /// Opens the protocol endpoint; port 0 picks a free port.
    protocol::Endpoint serve(const protocol::Endpoint& ep);
    void stop();

    /// Consistent view: no house appears at a day other than its tick's.
    nlohmann::json snapshot() const;
    /// Copy of one house (throws OutOfRange for an unknown address).
    HouseSim house(std::uint8_t address) const;
    std::shared_ptr<protocol::Slave> slave(std::uint8_t address) const;
    std::shared_ptr<protocol::Node> network() const { return root_; }

private:
    struct Slot;
    class HouseDevice;

    Condominium(CondoConfig config, std::vector<HouseSim> houses, std::uint32_t next_flock_id);
    void wire();
    Slot& slot(std::uint8_t address) const;

    CondoConfig config_;
    std::vector<std::unique_ptr<Slot>> slots_;
    std::shared_ptr<protocol::Switch> root_;
    std::map<std::uint8_t, std::shared_ptr<protocol::Slave>> slaves_;
    std::uint32_t next_flock_id_ = 1;
    mutable std::mutex tick_mu_;
    std::unique_ptr<protocol::BusServer> server_;
    std::atomic<bool> ticking_{false};
    std::thread ticker_;
};

} // namespace flockplan::condosim
