#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flockplan/evolve/config.hpp"
#include "flockplan/protocol/master.hpp"
#include "flockplan/supervisor/adaptive.hpp"
#include "flockplan/supervisor/alarms.hpp"
#include "flockplan/supervisor/store.hpp"

namespace flockplan::supervisor {

struct ServiceConfig {
    std::string db_path = ":memory:";
    protocol::MasterConfig master;
    std::vector<std::uint8_t> houses{1, 2, 3};
    std::filesystem::path models_dir;   // loaded when no models are passed in
    std::filesystem::path samples_path; // base dataset, same rule
    evolve::GaConfig ga;
    double coverage = 0.8; // reachable-state narrowing of the search space
    std::chrono::seconds alarm_window{3600};
    AdaptiveConfig adaptive;
    surrogate::Hyperparams retrain;
};

struct HouseView {
    std::uint8_t address = 0;
    bool reachable = false;
    std::optional<protocol::StatusReport> status;
    std::optional<protocol::Telemetry> telemetry;
    std::string error;
    std::string polled_at;
};

nlohmann::json to_json(const HouseView& h);
nlohmann::json to_json(const protocol::Telemetry& t);

struct AckEntry {
    std::uint8_t house = 0;
    int day = 0;
    std::uint32_t flock_id = 0;
    bool ok = false;
    int retries = 0;
    std::string error;
    std::string message;
};

struct AckReport {
    std::string source;
    std::vector<AckEntry> entries;
    int failures() const;
};

nlohmann::json to_json(const AckReport& r);

/// Rebuilds a completed flock from stored telemetry (days 0..40). Values are
/// at telemetry resolution.
FlockSample sample_from_records(const FlockRecord& flock, const std::vector<TelemetryRecord>& days);

/// The supervision service. Talks to the houses only through the protocol
/// master; API handlers may call into it from several threads.
class Service {
public:
    explicit Service(ServiceConfig config, std::optional<surrogate::ModelSet> models = std::nullopt,
                     std::optional<std::vector<FlockSample>> base = std::nullopt);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Reads status and telemetry of every house, records them, opens and
    /// closes flock records, and raises alarms.
    std::vector<HouseView> poll();
    std::vector<HouseView> houses() const;

    /// Unicasts day `day` of `plans` to every house. Failures are reported per
    /// house and raise a link alarm; they never abort the other houses.
    /// Throws OutOfRange for a day outside 1..40 before sending anything.
    AckReport distribute_daily_plan(int day, const std::vector<DayPlan>& plans, const std::string& source);

    /// Operator mortality for the day in progress of `house`.
    nlohmann::json record_mortality(std::uint8_t house, int day, std::int64_t count, const std::string& operator_id);

    /// Starts a planner run in the background; `overrides` may carry "ga" and
    /// "coverage". Returns the job id.
    std::string start_optimize(const nlohmann::json& overrides = {});
    std::string start_adaptive();
    std::optional<nlohmann::json> job(const std::string& id) const;
    /// Blocks until the job leaves queued/running; returns its final state.
    nlohmann::json wait_job(const std::string& id);

    /// Makes a finished optimize job's plan current and sends every house
    /// the plan for its next day. NotFound / JobNotReady otherwise.
    AckReport approve(const std::string& job_id);
    /// Sends each active house the current plan's entry for the day after its
    /// last telemetry, once per (house, flock, day).
    AckReport distribute_next();
    std::optional<nlohmann::json> current_plan() const;

    /// poll() then, when a plan is approved, the plan for the next day.
    std::optional<AckReport> tick();
    void start_autopilot(std::chrono::milliseconds every);

    nlohmann::json alarms(int limit = 200) const;
    nlohmann::json flock_report(int flock_id) const;
    nlohmann::json telemetry(std::uint8_t house, int from_day, int to_day, std::optional<int> flock_id) const;

    Store& store() { return store_; }
    protocol::Master& master() { return master_; }
    int model_version() const;
    std::shared_ptr<const surrogate::ModelSet> models() const;

private:
    struct Job;
    std::string new_job(const std::string& kind);
    void finish_job(const std::string& id, const nlohmann::json& result, const std::string& error);
    void raise_link_alarm(std::uint8_t house, const std::string& why);
    AckEntry send_plan(std::uint8_t house, std::uint32_t flock_id, const DayPlan& plan, const std::string& source);
    std::vector<FlockSample> base() const;

    ServiceConfig config_;
    Store store_;
    protocol::Master master_;
    AlarmDedup dedup_;
    std::vector<AlarmRule> rules_;

    mutable std::mutex state_mu_;
    std::map<std::uint8_t, HouseView> views_;
    std::shared_ptr<const surrogate::ModelSet> models_;
    std::shared_ptr<const std::vector<FlockSample>> base_;
    int model_version_ = 0;

    mutable std::mutex jobs_mu_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::vector<std::thread> workers_;
    std::atomic<bool> stopping_{false};
    std::thread autopilot_;
    std::map<std::uint8_t, std::pair<std::uint32_t, int>> sent_; // last acked (flock, day) per house
    std::mutex house_mu_; // serialises per-house mutations (mortality, distribution)
};

} // namespace flockplan::supervisor
