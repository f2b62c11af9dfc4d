#pragma once

// Fixed-point payload layouts, all big-endian:
//   temperature  degC x 10, int16
//   humidity     %    x 10, uint16
//   weights      grams,     uint32 (bird weight and house feed alike)
//   counts                  uint32
// Values leave a house already rounded to these resolutions, so what is sent
// and what the house recorded compare exactly.

#include <cstdint>
#include <span>
#include <vector>

#include "flockplan/domain.hpp"

namespace flockplan::protocol {

/// One house's reading for its most recent completed day (day 0 before the
/// first step). The climate fields are those of the plan applied that day.
struct Telemetry {
    std::uint32_t flock_id = 0;
    std::uint16_t day = 0;
    double t_min = 0.0, t_avg = 0.0, t_max = 0.0;
    double h_min = 0.0, h_avg = 0.0, h_max = 0.0;
    std::uint32_t mdw_g = 0;
    std::uint32_t dfc_g = 0;
    std::uint32_t dm = 0;
    std::uint32_t nlb = 0;

    bool operator==(const Telemetry&) const = default;
};

inline constexpr std::size_t kTelemetrySize = 4 + 2 + 6 * 2 + 4 * 4;

/// Rounds a full-precision day into what the sensors report.
Telemetry quantize(std::uint32_t flock_id, const DayPlan* plan, const DayOutcome& outcome);

struct PlanMessage {
    std::uint32_t flock_id = 0;
    DayPlan plan;

    bool operator==(const PlanMessage&) const = default;
};

inline constexpr std::size_t kPlanSize = 4 + 2 + 6 * 2;

/// Rounds temperatures and humidities to 0.1, the wire resolution.
DayPlan quantize(const DayPlan& plan);

enum class HouseStatus : std::uint8_t { Idle = 0, Active = 1, Complete = 2 };

struct StatusReport {
    std::uint32_t flock_id = 0;
    std::uint16_t day = 0;
    HouseStatus status = HouseStatus::Idle;
    std::uint16_t fallback_days = 0; // days run without a written plan
    std::uint32_t initial_birds = 0;
    std::uint32_t capacity = 0;
    std::uint16_t length_dm = 0; // decimetres
    std::uint16_t width_dm = 0;
    std::uint32_t arrival_mg = 0; // arrival weight, milligrams

    bool operator==(const StatusReport&) const = default;
};

inline constexpr std::size_t kStatusSize = 4 + 2 + 1 + 2 + 4 + 4 + 2 + 2 + 4;

struct MortalityMessage {
    std::uint32_t flock_id = 0;
    std::uint16_t day = 0;
    std::uint32_t count = 0;

    bool operator==(const MortalityMessage&) const = default;
};

inline constexpr std::size_t kMortalitySize = 4 + 2 + 4;

std::vector<std::uint8_t> encode(const Telemetry& t);
std::vector<std::uint8_t> encode(const PlanMessage& p);
std::vector<std::uint8_t> encode(const StatusReport& s);
std::vector<std::uint8_t> encode(const MortalityMessage& m);
std::vector<std::uint8_t> encode_day(std::uint16_t day);

// Decoders throw ProtocolViolation on a wrong payload length.
Telemetry decode_telemetry(std::span<const std::uint8_t> p);
/// Range-checks nothing; the receiver validates plan invariants.
PlanMessage decode_plan(std::span<const std::uint8_t> p);
StatusReport decode_status(std::span<const std::uint8_t> p);
MortalityMessage decode_mortality(std::span<const std::uint8_t> p);
std::uint16_t decode_day(std::span<const std::uint8_t> p);

} // namespace flockplan::protocol
