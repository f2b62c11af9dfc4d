#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flockplan/protocol/payload.hpp"

namespace flockplan::supervisor {

enum class Severity { Low, Medium, High };
const char* to_string(Severity s);
Severity severity_from(const std::string& s);

/// Raises an event when `variable` leaves [lo, hi]. Variables are the
/// telemetry fields: t_min, t_avg, t_max, h_min, h_avg, h_max, mdw, dfc, dm,
/// nlb, plus "link" for houses that stop answering.
struct AlarmRule {
    int id = 0;
    std::string variable;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    Severity severity = Severity::Medium;
};

inline constexpr int kLinkRuleId = 0;

struct AlarmEvent {
    std::string timestamp;
    std::uint8_t house = 0;
    std::string variable;
    double value = 0.0;
    int rule_id = 0;
    Severity severity = Severity::Medium;
};

struct Reading {
    std::uint8_t house = 0;
    protocol::Telemetry telemetry;
};

/// Throws ConfigDomain on an unknown variable, lo > hi or a repeated id.
void validate_rules(const std::vector<AlarmRule>& rules);
std::vector<AlarmRule> default_rules();
double telemetry_value(const protocol::Telemetry& t, const std::string& variable);

/// Remembers the last event per (rule, house) so a violation that persists
/// is reported once per window. Clears when the value comes back in bounds.
class AlarmDedup {
public:
    explicit AlarmDedup(std::chrono::seconds window = std::chrono::seconds(3600)) : window_(window) {}
    /// True when the event should be raised now.
    bool admit(int rule, std::uint8_t house, std::chrono::system_clock::time_point now);
    void clear(int rule, std::uint8_t house) { last_.erase({rule, house}); }

private:
    std::chrono::seconds window_;
    std::map<std::pair<int, std::uint8_t>, std::chrono::system_clock::time_point> last_;
};

/// Evaluates every rule against every reading. Pure apart from `dedup`.
std::vector<AlarmEvent> evaluate_alarms(const std::vector<Reading>& snapshot, const std::vector<AlarmRule>& rules,
                                        AlarmDedup& dedup,
                                        std::chrono::system_clock::time_point now = std::chrono::system_clock::now());

} // namespace flockplan::supervisor
