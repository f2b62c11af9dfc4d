#include "flockplan/condosim/house.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "flockplan/domain_json.hpp"
#include "flockplan/protocol/frame.hpp"

namespace flockplan::condosim {

void to_json(nlohmann::json& j, const HouseConfig& h) {
    j = {{"address", h.address},
         {"length_m", h.geometry.length_m},
         {"width_m", h.geometry.width_m},
         {"capacity", h.geometry.capacity},
         {"initial_birds", h.initial_birds},
         {"seed", h.seed}};
}

void from_json(const nlohmann::json& j, HouseConfig& h) {
    int address = j.at("address").get<int>();
    if (address < 1 || address > protocol::kMaxAddress)
        throw ConfigDomain("house address " + std::to_string(address) + " is outside 1..247");
    h.address = static_cast<std::uint8_t>(address);
    h.geometry.length_m = j.value("length_m", h.geometry.length_m);
    h.geometry.width_m = j.value("width_m", h.geometry.width_m);
    h.geometry.capacity = j.value("capacity", h.geometry.capacity);
    h.initial_birds = j.value("initial_birds", h.geometry.capacity);
    h.seed = j.value("seed", std::uint64_t{0});
}

HouseSim::HouseSim(const HouseConfig& house, const dataset::GeneratorConfig& generator, std::uint32_t flock_id,
                   std::uint64_t seed)
    : house_(house), generator_(generator), flock_id_(flock_id), seed_(seed), rng_(dataset::flock_rng(seed)) {
    generator_.validate();
    if (house.initial_birds > house.geometry.capacity)
        throw ConfigDomain("house " + std::to_string(house.address) + " is stocked above capacity");
    state_ = dataset::start_flock(generator_, house.geometry, house.initial_birds, rng_);
    arrival_mdw_ = state_.mdw;
}

DayOutcome HouseSim::step_day() {
    if (complete()) throw FlockComplete("flock " + std::to_string(flock_id_) + " already reached day 40");
    const int t = state_.day + 1;
    DayPlan plan;
    if (auto it = written_.find(t); it != written_.end()) {
        plan = it->second;
    } else {
        // carry the last plan only once one was written; a house that never
        // got a plan follows the comfort curve day by day
        if (written_.lower_bound(t) != written_.begin()) {
            plan = applied_.back();
        } else {
            plan = dataset::comfort_plans(generator_)[static_cast<std::size_t>(t - 1)];
        }
        plan.day = t;
        ++fallback_days_;
        spdlog::warn("house {}: no plan for day {}, running the fallback plan", house_.address, t);
    }
    DayOutcome o = dataset::step_flock(generator_, state_, plan, rng_, pending_deaths_);
    pending_deaths_ = 0;
    applied_.push_back(plan);
    ledger_.push_back(o);
    return o;
}

void HouseSim::write_plan(const DayPlan& plan) {
    validate(plan);
    if (plan.day <= state_.day)
        throw StaleDay("day " + std::to_string(plan.day) + " has already run in house " + std::to_string(house_.address));
    written_[plan.day] = plan;
}

std::optional<DayPlan> HouseSim::plan_for(int day) const {
    if (day >= 1 && day <= static_cast<int>(applied_.size())) return applied_[static_cast<std::size_t>(day - 1)];
    if (auto it = written_.find(day); it != written_.end()) return it->second;
    return std::nullopt;
}

void HouseSim::inject_mortality(std::int64_t count) {
    if (count < 0) throw OutOfRange("mortality count must be non-negative");
    if (complete()) throw NoActiveFlock("flock " + std::to_string(flock_id_) + " is complete");
    pending_deaths_ += count;
}

protocol::Telemetry HouseSim::telemetry() const {
    if (ledger_.empty()) {
        DayOutcome arrival;
        arrival.day = 0;
        arrival.mdw = arrival_mdw_;
        arrival.nlb = house_.initial_birds;
        return protocol::quantize(flock_id_, nullptr, arrival);
    }
    return protocol::quantize(flock_id_, &applied_.back(), ledger_.back());
}

protocol::StatusReport HouseSim::status() const {
    protocol::StatusReport s;
    s.flock_id = flock_id_;
    s.day = static_cast<std::uint16_t>(state_.day);
    s.status = complete() ? protocol::HouseStatus::Complete : protocol::HouseStatus::Active;
    s.fallback_days = static_cast<std::uint16_t>(fallback_days_);
    s.initial_birds = static_cast<std::uint32_t>(house_.initial_birds);
    s.capacity = static_cast<std::uint32_t>(house_.geometry.capacity);
    s.length_dm = static_cast<std::uint16_t>(std::lround(house_.geometry.length_m * 10.0));
    s.width_dm = static_cast<std::uint16_t>(std::lround(house_.geometry.width_m * 10.0));
    s.arrival_mg = static_cast<std::uint32_t>(std::lround(arrival_mdw_ * 1000.0));
    return s;
}

FlockSample HouseSim::to_sample() const {
    FlockSample s;
    s.flock_id = static_cast<int>(flock_id_);
    s.house = house_.address;
    s.geometry = house_.geometry;
    s.initial_birds = house_.initial_birds;
    s.initial = {arrival_mdw_, 0.0, static_cast<double>(house_.initial_birds) / house_.geometry.area_m2()};
    s.plans = applied_;
    s.outcomes = ledger_;
    return s;
}

nlohmann::json HouseSim::snapshot() const {
    std::ostringstream rng;
    rng << rng_;
    nlohmann::json written = nlohmann::json::array();
    for (const auto& [day, p] : written_) written.push_back(p);
    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& o : ledger_)
        ledger.push_back({{"day", o.day}, {"mdw", o.mdw}, {"dfcpb", o.dfcpb}, {"nlbpa", o.nlbpa},
                          {"dm", o.dm}, {"nlb", o.nlb}, {"dfc", o.dfc}, {"dmpa", o.dmpa}});
    return {{"house", house_},
            {"generator", generator_},
            {"flock_id", flock_id_},
            {"seed", seed_},
            {"rng", rng.str()},
            {"state", {{"day", state_.day}, {"mdw", state_.mdw}, {"dfc", state_.dfc}, {"nlb", state_.nlb},
                       {"flock_factor", state_.flock_factor}}},
            {"arrival_mdw", arrival_mdw_},
            {"written", written},
            {"applied", applied_},
            {"ledger", ledger},
            {"pending_deaths", pending_deaths_},
            {"fallback_days", fallback_days_}};
}

HouseSim HouseSim::restore(const nlohmann::json& j) {
    HouseSim h;
    h.house_ = j.at("house").get<HouseConfig>();
    h.generator_ = j.at("generator").get<dataset::GeneratorConfig>();
    h.flock_id_ = j.at("flock_id").get<std::uint32_t>();
    h.seed_ = j.at("seed").get<std::uint64_t>();
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> h.rng_;
    if (!rng) throw ParseError("house snapshot has an unreadable generator state", 0, "rng");
    const auto& s = j.at("state");
    h.state_.geometry = h.house_.geometry;
    h.state_.day = s.at("day").get<int>();
    h.state_.mdw = s.at("mdw").get<double>();
    h.state_.dfc = s.at("dfc").get<double>();
    h.state_.nlb = s.at("nlb").get<std::int64_t>();
    h.state_.flock_factor = s.at("flock_factor").get<double>();
    h.arrival_mdw_ = j.at("arrival_mdw").get<double>();
    for (const auto& p : j.at("written")) {
        auto plan = p.get<DayPlan>();
        h.written_[plan.day] = plan;
    }
    h.applied_ = j.at("applied").get<std::vector<DayPlan>>();
    for (const auto& o : j.at("ledger")) {
        DayOutcome d;
        d.day = o.at("day").get<int>();
        d.mdw = o.at("mdw").get<double>();
        d.dfcpb = o.at("dfcpb").get<double>();
        d.nlbpa = o.at("nlbpa").get<double>();
        d.dm = o.at("dm").get<std::int64_t>();
        d.nlb = o.at("nlb").get<std::int64_t>();
        d.dfc = o.at("dfc").get<double>();
        d.dmpa = o.at("dmpa").get<double>();
        h.ledger_.push_back(d);
    }
    h.pending_deaths_ = j.at("pending_deaths").get<std::int64_t>();
    h.fallback_days_ = j.at("fallback_days").get<int>();
    if (h.ledger_.size() != static_cast<std::size_t>(h.state_.day) || h.applied_.size() != h.ledger_.size())
        throw ParseError("house snapshot ledger does not match its day counter", 0, "ledger");
    return h;
}

} // namespace flockplan::condosim
