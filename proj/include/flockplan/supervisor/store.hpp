#pragma once

// Relational persistence of the supervision service (SQLite). Every method
// runs in its own transaction, so a restart keeps whatever was committed.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockplan/domain.hpp"
#include "flockplan/protocol/payload.hpp"

struct sqlite3;

namespace flockplan::supervisor {

/// Current time as ISO-8601 UTC with millisecond precision.
std::string now_iso();

enum class FlockStatus { Active, Complete, RejectedOutlier };
const char* to_string(FlockStatus s);
FlockStatus flock_status_from(const std::string& s);

struct FlockRecord {
    int id = 0;
    std::uint8_t house = 0;
    FlockStatus status = FlockStatus::Active;
    std::int64_t initial_birds = 0;
    HouseGeometry geometry;
    double arrival_mdw = 0.0;
    std::string started_at;
    std::string completed_at;
};

struct TelemetryRecord {
    std::uint8_t house = 0;
    protocol::Telemetry reading;
    std::string recorded_at;
};

struct MortalityEntry {
    int flock_id = 0;
    std::uint8_t house = 0;
    int day = 0;
    std::int64_t count = 0;
    std::string operator_id;
    std::string recorded_at;
};

struct AppliedPlan {
    int flock_id = 0;
    std::uint8_t house = 0;
    DayPlan plan;
    std::string source; // job id or "manual"
    std::string distributed_at;
};

struct AuditEntry {
    long id = 0;
    std::string at;
    std::string kind;
    nlohmann::json detail;
};

struct StoredRule {
    int id = 0;
    std::string variable;
    double lo = 0.0;
    double hi = 0.0;
    std::string severity;
};

struct StoredAlarm {
    long id = 0;
    std::string at;
    std::uint8_t house = 0;
    std::string variable;
    double value = 0.0;
    int rule_id = 0;
    std::string severity;
};

struct JobRecord {
    std::string id;
    std::string kind;
    std::string status; // queued, running, done, failed, interrupted
    std::string created_at;
    std::string finished_at;
    nlohmann::json result;
    std::string error;
};

class Store {
public:
    /// ":memory:" gives a private in-memory database.
    explicit Store(const std::string& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // Flocks. At most one active flock per house; starting a second one
    // throws StorageError.
    void insert_flock(const FlockRecord& f);
    void set_flock_status(int id, FlockStatus status);
    std::optional<FlockRecord> flock(int id) const;
    std::optional<FlockRecord> active_flock(std::uint8_t house) const;
    std::vector<FlockRecord> flocks() const;

    /// Keyed by (flock, day); a repeated reading replaces the earlier one.
    void put_telemetry(const TelemetryRecord& t);
    std::vector<TelemetryRecord> telemetry(int flock_id, int from_day = 0, int to_day = kFlockDays) const;

    void add_mortality(const MortalityEntry& m);
    std::vector<MortalityEntry> mortality(int flock_id) const;

    void put_applied_plan(const AppliedPlan& p);
    std::vector<AppliedPlan> applied_plans(int flock_id) const;

    long audit(const std::string& kind, const nlohmann::json& detail);
    std::vector<AuditEntry> audit_log(const std::string& kind = {}) const;

    void put_rule(const StoredRule& r);
    std::vector<StoredRule> rules() const;
    /// Throws StorageError when the rule does not exist.
    long add_alarm(const StoredAlarm& a);
    std::vector<StoredAlarm> alarms(int limit = 200) const;

    void put_job(const JobRecord& j);
    std::optional<JobRecord> job(const std::string& id) const;
    /// Marks jobs left running by a previous process as interrupted.
    int interrupt_running_jobs();

    void set_meta(const std::string& key, const nlohmann::json& value);
    std::optional<nlohmann::json> meta(const std::string& key) const;

private:
    void exec(const std::string& sql) const;

    sqlite3* db_ = nullptr;
    mutable std::mutex mu_;
};

} // namespace flockplan::supervisor
