#include "flockplan/condosim/condominium.hpp"

#include <set>

#include <spdlog/spdlog.h>

namespace flockplan::condosim {

CondoConfig CondoConfig::default_condo(int n) {
    if (n < 1) throw ConfigDomain("a condominium needs at least one house");
    CondoConfig c;
    const auto specs = dataset::default_houses();
    for (int k = 0; k < n; ++k) {
        const auto& spec = specs[static_cast<std::size_t>(k) % specs.size()];
        c.houses.push_back({static_cast<std::uint8_t>(k + 1), spec.geometry, spec.initial_birds, 0});
    }
    return c;
}

void CondoConfig::validate() const {
    if (schema_version != 1) throw SchemaVersionError("unsupported condominium schema " + std::to_string(schema_version));
    if (houses.empty()) throw ConfigDomain("a condominium needs at least one house");
    if (tick_ms < 0) throw ConfigDomain("tick_ms must be non-negative");
    if (branch_size < 1) throw ConfigDomain("branch_size must be at least 1");
    std::set<int> seen;
    for (const auto& h : houses) {
        if (h.address == protocol::kBroadcast || h.address > protocol::kMaxAddress)
            throw AddressCollision("house address " + std::to_string(h.address) + " is outside 1..247");
        if (!seen.insert(h.address).second) throw AddressCollision("two houses share address " + std::to_string(h.address));
        if (h.initial_birds <= 0 || h.initial_birds > h.geometry.capacity)
            throw ConfigDomain("house " + std::to_string(h.address) + " must hold 1..capacity birds");
    }
    generator.validate();
}

void to_json(nlohmann::json& j, const CondoConfig& c) {
    j = {{"schema_version", c.schema_version}, {"houses", c.houses}, {"generator", c.generator},
         {"tick_ms", c.tick_ms},               {"seed", c.seed},     {"first_flock_id", c.first_flock_id},
         {"branch_size", c.branch_size}};
}

void from_json(const nlohmann::json& j, CondoConfig& c) {
    c.schema_version = j.value("schema_version", 1);
    if (j.contains("houses")) {
        c.houses = j.at("houses").get<std::vector<HouseConfig>>();
    } else {
        c.houses = CondoConfig::default_condo(j.value("n_houses", 3)).houses;
    }
    if (j.contains("generator")) c.generator = j.at("generator").get<dataset::GeneratorConfig>();
    c.tick_ms = j.value("tick_ms", c.tick_ms);
    c.seed = j.value("seed", c.seed);
    c.first_flock_id = j.value("first_flock_id", c.first_flock_id);
    c.branch_size = j.value("branch_size", c.branch_size);
    c.validate();
}

std::uint64_t flock_seed(std::uint64_t condo_seed, std::uint32_t flock_id) {
    std::uint64_t z = condo_seed + 0x9E3779B97F4A7C15ULL * (flock_id + 1ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct Condominium::Slot {
    explicit Slot(HouseSim h) : sim(std::move(h)) {}
    mutable std::mutex mu;
    HouseSim sim;
};

class Condominium::HouseDevice : public protocol::Device {
public:
    explicit HouseDevice(Slot& slot) : slot_(slot) {}

    protocol::Telemetry telemetry() override {
        std::lock_guard lock(slot_.mu);
        return slot_.sim.telemetry();
    }
    protocol::StatusReport status() override {
        std::lock_guard lock(slot_.mu);
        return slot_.sim.status();
    }
    std::optional<protocol::ExceptionCode> write_plan(const protocol::PlanMessage& m) override {
        std::lock_guard lock(slot_.mu);
        if (m.flock_id != slot_.sim.flock_id() || m.plan.day <= slot_.sim.day() || m.plan.day > kFlockDays)
            return protocol::ExceptionCode::IllegalDataValue;
        slot_.sim.write_plan(m.plan);
        return std::nullopt;
    }
    std::optional<protocol::PlanMessage> read_plan(std::uint16_t day) override {
        std::lock_guard lock(slot_.mu);
        auto p = slot_.sim.plan_for(day);
        if (!p) return std::nullopt;
        return protocol::PlanMessage{slot_.sim.flock_id(), protocol::quantize(*p)};
    }
    std::optional<protocol::ExceptionCode> inject_mortality(const protocol::MortalityMessage& m) override {
        std::lock_guard lock(slot_.mu);
        if (m.flock_id != slot_.sim.flock_id() || slot_.sim.complete() || m.day != slot_.sim.day() + 1)
            return protocol::ExceptionCode::IllegalDataValue;
        slot_.sim.inject_mortality(m.count);
        return std::nullopt;
    }

private:
    Slot& slot_;
};

Condominium::Condominium(CondoConfig config) : config_(std::move(config)) {
    config_.validate();
    std::uint32_t id = config_.first_flock_id;
    for (const auto& h : config_.houses) {
        const std::uint64_t seed = h.seed ? h.seed : flock_seed(config_.seed, id);
        slots_.push_back(std::make_unique<Slot>(HouseSim(h, config_.generator, id, seed)));
        ++id;
    }
    next_flock_id_ = id;
    wire();
}

Condominium::Condominium(CondoConfig config, std::vector<HouseSim> houses, std::uint32_t next_flock_id)
    : config_(std::move(config)), next_flock_id_(next_flock_id) {
    config_.validate();
    for (auto& h : houses) slots_.push_back(std::make_unique<Slot>(std::move(h)));
    wire();
}

Condominium::~Condominium() { stop(); }

void Condominium::wire() {
    root_ = std::make_shared<protocol::Switch>();
    std::shared_ptr<protocol::Switch> branch;
    int in_branch = 0;
    for (auto& s : slots_) {
        if (!branch || in_branch == config_.branch_size) {
            branch = std::make_shared<protocol::Switch>();
            root_->attach(branch);
            in_branch = 0;
        }
        auto slave = std::make_shared<protocol::Slave>(s->sim.address(), std::make_shared<HouseDevice>(*s));
        branch->attach(slave);
        slaves_[s->sim.address()] = slave;
        ++in_branch;
    }
}

std::vector<std::uint8_t> Condominium::addresses() const {
    std::vector<std::uint8_t> out;
    for (const auto& s : slots_) out.push_back(s->sim.address());
    return out;
}

Condominium::Slot& Condominium::slot(std::uint8_t address) const {
    for (const auto& s : slots_)
        if (s->sim.address() == address) return *s;
    throw OutOfRange("no house at address " + std::to_string(address));
}

std::map<std::uint8_t, DayOutcome> Condominium::advance_day() {
    std::lock_guard tick(tick_mu_);
    std::map<std::uint8_t, DayOutcome> out;
    for (auto& s : slots_) {
        std::lock_guard lock(s->mu);
        if (!s->sim.complete()) out[s->sim.address()] = s->sim.step_day();
    }
    return out;
}

void Condominium::restock() {
    std::lock_guard tick(tick_mu_);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        auto& s = *slots_[k];
        std::lock_guard lock(s.mu);
        const auto& h = config_.houses[k];
        const std::uint32_t id = next_flock_id_++;
        s.sim = HouseSim(h, config_.generator, id, flock_seed(config_.seed, id));
    }
}

void Condominium::start_ticking() {
    if (ticking_.exchange(true)) return;
    if (config_.tick_ms <= 0) throw ConfigDomain("tick_ms must be positive to tick on a timer");
    ticker_ = std::thread([this] {
        auto next = std::chrono::steady_clock::now();
        while (ticking_) {
            next += std::chrono::milliseconds(config_.tick_ms);
            while (ticking_ && std::chrono::steady_clock::now() < next)
                std::this_thread::sleep_for(std::chrono::milliseconds(std::min(config_.tick_ms, 20)));
            if (!ticking_) break;
            try {
                advance_day();
            } catch (const Error& e) {
                spdlog::error("condominium tick failed: {}", e.what());
            }
        }
    });
}

protocol::Endpoint Condominium::serve(const protocol::Endpoint& ep) {
    if (server_) return server_->endpoint();
    server_ = std::make_unique<protocol::BusServer>(root_, ep);
    spdlog::info("condominium of {} houses listening on {}", slots_.size(), server_->endpoint().str());
    return server_->endpoint();
}

void Condominium::stop() {
    ticking_ = false;
    if (ticker_.joinable()) ticker_.join();
    if (server_) {
        server_->stop();
        server_.reset();
    }
}

nlohmann::json Condominium::snapshot() const {
    std::lock_guard tick(tick_mu_);
    nlohmann::json houses = nlohmann::json::array();
    for (const auto& s : slots_) {
        std::lock_guard lock(s->mu);
        houses.push_back(s->sim.snapshot());
    }
    return {{"schema_version", 1}, {"config", config_}, {"next_flock_id", next_flock_id_}, {"houses", houses}};
}

std::unique_ptr<Condominium> Condominium::from_snapshot(const nlohmann::json& snapshot) {
    if (snapshot.value("schema_version", 0) != 1) throw SchemaVersionError("unsupported condominium snapshot");
    auto config = snapshot.at("config").get<CondoConfig>();
    std::vector<HouseSim> houses;
    for (const auto& h : snapshot.at("houses")) houses.push_back(HouseSim::restore(h));
    if (houses.size() != config.houses.size()) throw ParseError("snapshot house count differs from its config", 0, "houses");
    return std::unique_ptr<Condominium>(
        new Condominium(std::move(config), std::move(houses), snapshot.at("next_flock_id").get<std::uint32_t>()));
}

HouseSim Condominium::house(std::uint8_t address) const {
    auto& s = slot(address);
    std::lock_guard lock(s.mu);
    return s.sim;
}

std::shared_ptr<protocol::Slave> Condominium::slave(std::uint8_t address) const {
    auto it = slaves_.find(address);
    if (it == slaves_.end()) throw OutOfRange("no house at address " + std::to_string(address));
    return it->second;
}

} // namespace flockplan::condosim
