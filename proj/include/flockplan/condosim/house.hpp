#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "flockplan/dataset/generator.hpp"
#include "flockplan/protocol/payload.hpp"

namespace flockplan::condosim {

struct HouseConfig {
    std::uint8_t address = 1;
    HouseGeometry geometry;
    std::int64_t initial_birds = 0;
    std::uint64_t seed = 0; // 0 derives one from the condominium seed and flock id
};

void to_json(nlohmann::json& j, const HouseConfig& h);
void from_json(const nlohmann::json& j, HouseConfig& h);

/// One house running one flock, a day at a time, on the generator's daily
/// transition. Not thread-safe; the condominium serialises access.
class HouseSim {
public:
    HouseSim(const HouseConfig& house, const dataset::GeneratorConfig& generator, std::uint32_t flock_id,
             std::uint64_t seed);

    std::uint8_t address() const { return house_.address; }
    std::uint32_t flock_id() const { return flock_id_; }
    const HouseConfig& house() const { return house_; }
    /// Days completed, 0..40.
    int day() const { return state_.day; }
    bool complete() const { return state_.day >= kFlockDays; }

    /// Runs the next day under its written plan. Without one it carries the
    /// previous day's plan, or follows the comfort curve when no plan was ever
    /// written, and counts a fallback day. Throws FlockComplete after day 40.
    DayOutcome step_day();

    /// Stores the plan for a future day (last write wins). Throws InvalidPlan
    /// or StaleDay for a day already run.
    void write_plan(const DayPlan& plan);
    std::optional<DayPlan> plan_for(int day) const;
    /// Deaths reported by the operator for the day in progress; added to that
    /// day's mortality when it is stepped.
    void inject_mortality(std::int64_t count);
    std::int64_t pending_mortality() const { return pending_deaths_; }

    const std::vector<DayOutcome>& ledger() const { return ledger_; }
    const std::vector<DayPlan>& applied() const { return applied_; }
    int fallback_days() const { return fallback_days_; }
    double arrival_weight() const { return arrival_mdw_; }

    /// Reading of the last completed day at wire resolution.
    protocol::Telemetry telemetry() const;
    protocol::StatusReport status() const;

    /// Full-precision record of the flock so far.
    FlockSample to_sample() const;

    nlohmann::json snapshot() const;
    static HouseSim restore(const nlohmann::json& j);

private:
    HouseSim() = default;

    HouseConfig house_;
    dataset::GeneratorConfig generator_;
    std::uint32_t flock_id_ = 0;
    std::uint64_t seed_ = 0;
    std::mt19937_64 rng_;
    dataset::FlockState state_;
    double arrival_mdw_ = 0.0;
    std::map<int, DayPlan> written_;
    std::vector<DayPlan> applied_;
    std::vector<DayOutcome> ledger_;
    std::int64_t pending_deaths_ = 0;
    int fallback_days_ = 0;
};

} // namespace flockplan::condosim
