#include "flockplan/supervisor/alarms.hpp"

#include <set>

#include "flockplan/supervisor/store.hpp"

namespace flockplan::supervisor {

const char* to_string(Severity s) {
    switch (s) {
    case Severity::Low: return "low";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
    }
    return "unknown";
}

Severity severity_from(const std::string& s) {
    if (s == "low") return Severity::Low;
    if (s == "medium") return Severity::Medium;
    if (s == "high") return Severity::High;
    throw ConfigDomain("unknown severity '" + s + "'");
}

double telemetry_value(const protocol::Telemetry& t, const std::string& v) {
    if (v == "t_min") return t.t_min;
    if (v == "t_avg") return t.t_avg;
    if (v == "t_max") return t.t_max;
    if (v == "h_min") return t.h_min;
    if (v == "h_avg") return t.h_avg;
    if (v == "h_max") return t.h_max;
    if (v == "mdw") return t.mdw_g;
    if (v == "dfc") return t.dfc_g / 1000.0;
    if (v == "dm") return t.dm;
    if (v == "nlb") return t.nlb;
    throw ConfigDomain("unknown alarm variable '" + v + "'");
}

void validate_rules(const std::vector<AlarmRule>& rules) {
    std::set<int> ids;
    for (const auto& r : rules) {
        if (r.variable != "link") telemetry_value(protocol::Telemetry{}, r.variable);
        if (!(r.lo <= r.hi)) throw ConfigDomain("alarm rule " + std::to_string(r.id) + " has lo above hi");
        if (!ids.insert(r.id).second) throw ConfigDomain("alarm rule id " + std::to_string(r.id) + " repeats");
    }
}

std::vector<AlarmRule> default_rules() {
    const double inf = std::numeric_limits<double>::infinity();
    return {
        {kLinkRuleId, "link", 0.0, 0.0, Severity::High},
        {1, "t_max", -inf, 35.0, Severity::High},
        {2, "t_min", 16.0, inf, Severity::Medium},
        {3, "h_max", -inf, 90.0, Severity::Medium},
        {4, "h_min", 30.0, inf, Severity::Low},
        {5, "dm", -inf, 500.0, Severity::High},
    };
}

bool AlarmDedup::admit(int rule, std::uint8_t house, std::chrono::system_clock::time_point now) {
    auto key = std::make_pair(rule, house);
    auto it = last_.find(key);
    if (it != last_.end() && now - it->second < window_) return false;
    last_[key] = now;
    return true;
}

std::vector<AlarmEvent> evaluate_alarms(const std::vector<Reading>& snapshot, const std::vector<AlarmRule>& rules,
                                        AlarmDedup& dedup, std::chrono::system_clock::time_point now) {
    std::vector<AlarmEvent> out;
    const std::string stamp = now_iso();
    for (const auto& r : snapshot) {
        if (r.telemetry.day == 0) continue; // nothing measured before the first day
        for (const auto& rule : rules) {
            if (rule.variable == "link") continue;
            const double v = telemetry_value(r.telemetry, rule.variable);
            if (v >= rule.lo && v <= rule.hi) {
                dedup.clear(rule.id, r.house);
                continue;
            }
            if (!dedup.admit(rule.id, r.house, now)) continue;
            out.push_back({stamp, r.house, rule.variable, v, rule.id, rule.severity});
        }
    }
    return out;
}

} // namespace flockplan::supervisor
