#include "flockplan/supervisor/store.hpp"

#include <chrono>
#include <ctime>

#include <fmt/format.h>
#include <sqlite3.h>

#include "flockplan/domain_json.hpp"

namespace flockplan::supervisor {

std::string now_iso() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t t = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

const char* to_string(FlockStatus s) {
    switch (s) {
    case FlockStatus::Active: return "active";
    case FlockStatus::Complete: return "complete";
    case FlockStatus::RejectedOutlier: return "rejected_outlier";
    }
    return "unknown";
}

FlockStatus flock_status_from(const std::string& s) {
    if (s == "active") return FlockStatus::Active;
    if (s == "complete") return FlockStatus::Complete;
    if (s == "rejected_outlier") return FlockStatus::RejectedOutlier;
    throw StorageError("unknown flock status '" + s + "'");
}

namespace {

const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS flocks(
  id INTEGER PRIMARY KEY, house INTEGER NOT NULL, status TEXT NOT NULL,
  initial_birds INTEGER NOT NULL, length_m REAL NOT NULL, width_m REAL NOT NULL,
  capacity INTEGER NOT NULL, arrival_mdw REAL NOT NULL, started_at TEXT NOT NULL, completed_at TEXT);
CREATE UNIQUE INDEX IF NOT EXISTS one_active_flock ON flocks(house) WHERE status = 'active';
CREATE TABLE IF NOT EXISTS telemetry(
  flock_id INTEGER NOT NULL REFERENCES flocks(id), house INTEGER NOT NULL, day INTEGER NOT NULL,
  t_min REAL, t_avg REAL, t_max REAL, h_min REAL, h_avg REAL, h_max REAL,
  mdw_g INTEGER, dfc_g INTEGER, dm INTEGER, nlb INTEGER, recorded_at TEXT NOT NULL,
  PRIMARY KEY(flock_id, day));
CREATE TABLE IF NOT EXISTS mortality(
  id INTEGER PRIMARY KEY AUTOINCREMENT, flock_id INTEGER NOT NULL REFERENCES flocks(id), house INTEGER NOT NULL,
  day INTEGER NOT NULL, count INTEGER NOT NULL, operator TEXT, recorded_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS plans(
  flock_id INTEGER NOT NULL, house INTEGER NOT NULL, day INTEGER NOT NULL, plan TEXT NOT NULL,
  source TEXT, distributed_at TEXT NOT NULL, PRIMARY KEY(flock_id, day));
CREATE TABLE IF NOT EXISTS audit(
  id INTEGER PRIMARY KEY AUTOINCREMENT, at TEXT NOT NULL, kind TEXT NOT NULL, detail TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS alarm_rules(
  id INTEGER PRIMARY KEY, variable TEXT NOT NULL, lo REAL NOT NULL, hi REAL NOT NULL, severity TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS alarm_events(
  id INTEGER PRIMARY KEY AUTOINCREMENT, at TEXT NOT NULL, house INTEGER NOT NULL, variable TEXT NOT NULL,
  value REAL NOT NULL, rule_id INTEGER NOT NULL REFERENCES alarm_rules(id), severity TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS jobs(
  id TEXT PRIMARY KEY, kind TEXT NOT NULL, status TEXT NOT NULL, created_at TEXT NOT NULL,
  finished_at TEXT, result TEXT, error TEXT);
CREATE TABLE IF NOT EXISTS meta(key TEXT PRIMARY KEY, value TEXT NOT NULL);
)sql";

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK)
            throw StorageError(fmt::format("prepare failed: {} ({})", sqlite3_errmsg(db), sql));
    }
    ~Stmt() { sqlite3_finalize(st_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, std::int64_t v) { return check(sqlite3_bind_int64(st_, i, v)); }
    Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
    Stmt& bind(int i, double v) { return check(sqlite3_bind_double(st_, i, v)); }
    Stmt& bind(int i, const std::string& v) {
        return check(sqlite3_bind_text(st_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    }
    Stmt& bind_null(int i) { return check(sqlite3_bind_null(st_, i)); }

    /// True while rows remain.
    bool step() {
        int rc = sqlite3_step(st_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StorageError(fmt::format("statement failed: {}", sqlite3_errmsg(db_)));
    }
    void run() {
        while (step()) {
        }
    }

    std::int64_t i64(int c) const { return sqlite3_column_int64(st_, c); }
    int i32(int c) const { return sqlite3_column_int(st_, c); }
    double f64(int c) const { return sqlite3_column_double(st_, c); }
    std::string text(int c) const {
        auto p = sqlite3_column_text(st_, c);
        return p ? reinterpret_cast<const char*>(p) : "";
    }

private:
    Stmt& check(int rc) {
        if (rc != SQLITE_OK) throw StorageError(fmt::format("bind failed: {}", sqlite3_errmsg(db_)));
        return *this;
    }
    sqlite3* db_;
    sqlite3_stmt* st_ = nullptr;
};

FlockRecord read_flock(const Stmt& s) {
    FlockRecord f;
    f.id = s.i32(0);
    f.house = static_cast<std::uint8_t>(s.i32(1));
    f.status = flock_status_from(s.text(2));
    f.initial_birds = s.i64(3);
    f.geometry.length_m = s.f64(4);
    f.geometry.width_m = s.f64(5);
    f.geometry.capacity = s.i64(6);
    f.arrival_mdw = s.f64(7);
    f.started_at = s.text(8);
    f.completed_at = s.text(9);
    return f;
}

constexpr const char* kFlockColumns =
    "id, house, status, initial_birds, length_m, width_m, capacity, arrival_mdw, started_at, completed_at";

} // namespace

Store::Store(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StorageError("cannot open database " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 2000);
    exec("PRAGMA foreign_keys = ON;");
    exec(kSchema);
}

Store::~Store() {
    if (db_) sqlite3_close(db_);
}

void Store::exec(const std::string& sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StorageError(msg);
    }
}

void Store::insert_flock(const FlockRecord& f) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT INTO flocks(id, house, status, initial_birds, length_m, width_m, capacity, arrival_mdw, "
                "started_at, completed_at) VALUES(?,?,?,?,?,?,?,?,?,?)");
    s.bind(1, f.id).bind(2, static_cast<int>(f.house)).bind(3, std::string(to_string(f.status)));
    s.bind(4, f.initial_birds).bind(5, f.geometry.length_m).bind(6, f.geometry.width_m);
    s.bind(7, f.geometry.capacity).bind(8, f.arrival_mdw).bind(9, f.started_at.empty() ? now_iso() : f.started_at);
    if (f.completed_at.empty()) {
        s.bind_null(10);
    } else {
        s.bind(10, f.completed_at);
    }
    s.run();
}

void Store::set_flock_status(int id, FlockStatus status) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "UPDATE flocks SET status = ?, completed_at = CASE WHEN ? = 'active' THEN NULL ELSE ? END WHERE id = ?");
    const std::string st = to_string(status);
    s.bind(1, st).bind(2, st).bind(3, now_iso()).bind(4, id);
    s.run();
    if (sqlite3_changes(db_) == 0) throw NoActiveFlock("no flock with id " + std::to_string(id));
}

std::optional<FlockRecord> Store::flock(int id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, fmt::format("SELECT {} FROM flocks WHERE id = ?", kFlockColumns).c_str());
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_flock(s);
}

std::optional<FlockRecord> Store::active_flock(std::uint8_t house) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, fmt::format("SELECT {} FROM flocks WHERE house = ? AND status = 'active'", kFlockColumns).c_str());
    s.bind(1, static_cast<int>(house));
    if (!s.step()) return std::nullopt;
    return read_flock(s);
}

std::vector<FlockRecord> Store::flocks() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, fmt::format("SELECT {} FROM flocks ORDER BY id", kFlockColumns).c_str());
    std::vector<FlockRecord> out;
    while (s.step()) out.push_back(read_flock(s));
    return out;
}

void Store::put_telemetry(const TelemetryRecord& t) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO telemetry(flock_id, house, day, t_min, t_avg, t_max, h_min, h_avg, h_max, "
                "mdw_g, dfc_g, dm, nlb, recorded_at) VALUES(?,?,?,?,?,?,?,?,?,?,?,?,?,?)");
    const auto& r = t.reading;
    s.bind(1, static_cast<std::int64_t>(r.flock_id)).bind(2, static_cast<int>(t.house)).bind(3, static_cast<int>(r.day));
    s.bind(4, r.t_min).bind(5, r.t_avg).bind(6, r.t_max).bind(7, r.h_min).bind(8, r.h_avg).bind(9, r.h_max);
    s.bind(10, static_cast<std::int64_t>(r.mdw_g)).bind(11, static_cast<std::int64_t>(r.dfc_g));
    s.bind(12, static_cast<std::int64_t>(r.dm)).bind(13, static_cast<std::int64_t>(r.nlb));
    s.bind(14, t.recorded_at.empty() ? now_iso() : t.recorded_at);
    s.run();
}

std::vector<TelemetryRecord> Store::telemetry(int flock_id, int from_day, int to_day) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT house, day, t_min, t_avg, t_max, h_min, h_avg, h_max, mdw_g, dfc_g, dm, nlb, recorded_at "
                "FROM telemetry WHERE flock_id = ? AND day BETWEEN ? AND ? ORDER BY day");
    s.bind(1, flock_id).bind(2, from_day).bind(3, to_day);
    std::vector<TelemetryRecord> out;
    while (s.step()) {
        TelemetryRecord t;
        t.house = static_cast<std::uint8_t>(s.i32(0));
        auto& r = t.reading;
        r.flock_id = static_cast<std::uint32_t>(flock_id);
        r.day = static_cast<std::uint16_t>(s.i32(1));
        r.t_min = s.f64(2);
        r.t_avg = s.f64(3);
        r.t_max = s.f64(4);
        r.h_min = s.f64(5);
        r.h_avg = s.f64(6);
        r.h_max = s.f64(7);
        r.mdw_g = static_cast<std::uint32_t>(s.i64(8));
        r.dfc_g = static_cast<std::uint32_t>(s.i64(9));
        r.dm = static_cast<std::uint32_t>(s.i64(10));
        r.nlb = static_cast<std::uint32_t>(s.i64(11));
        t.recorded_at = s.text(12);
        out.push_back(t);
    }
    return out;
}

void Store::add_mortality(const MortalityEntry& m) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT INTO mortality(flock_id, house, day, count, operator, recorded_at) VALUES(?,?,?,?,?,?)");
    s.bind(1, m.flock_id).bind(2, static_cast<int>(m.house)).bind(3, m.day).bind(4, m.count);
    s.bind(5, m.operator_id).bind(6, m.recorded_at.empty() ? now_iso() : m.recorded_at);
    s.run();
}

std::vector<MortalityEntry> Store::mortality(int flock_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT house, day, count, operator, recorded_at FROM mortality WHERE flock_id = ? ORDER BY id");
    s.bind(1, flock_id);
    std::vector<MortalityEntry> out;
    while (s.step())
        out.push_back({flock_id, static_cast<std::uint8_t>(s.i32(0)), s.i32(1), s.i64(2), s.text(3), s.text(4)});
    return out;
}

void Store::put_applied_plan(const AppliedPlan& p) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO plans(flock_id, house, day, plan, source, distributed_at) VALUES(?,?,?,?,?,?)");
    s.bind(1, p.flock_id).bind(2, static_cast<int>(p.house)).bind(3, p.plan.day);
    s.bind(4, nlohmann::json(p.plan).dump()).bind(5, p.source);
    s.bind(6, p.distributed_at.empty() ? now_iso() : p.distributed_at);
    s.run();
}

std::vector<AppliedPlan> Store::applied_plans(int flock_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT house, plan, source, distributed_at FROM plans WHERE flock_id = ? ORDER BY day");
    s.bind(1, flock_id);
    std::vector<AppliedPlan> out;
    while (s.step()) {
        AppliedPlan p;
        p.flock_id = flock_id;
        p.house = static_cast<std::uint8_t>(s.i32(0));
        p.plan = nlohmann::json::parse(s.text(1)).get<DayPlan>();
        p.source = s.text(2);
        p.distributed_at = s.text(3);
        out.push_back(p);
    }
    return out;
}

long Store::audit(const std::string& kind, const nlohmann::json& detail) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT INTO audit(at, kind, detail) VALUES(?,?,?)");
    s.bind(1, now_iso()).bind(2, kind).bind(3, detail.dump());
    s.run();
    return static_cast<long>(sqlite3_last_insert_rowid(db_));
}

std::vector<AuditEntry> Store::audit_log(const std::string& kind) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, kind.empty() ? "SELECT id, at, kind, detail FROM audit ORDER BY id"
                             : "SELECT id, at, kind, detail FROM audit WHERE kind = ? ORDER BY id");
    if (!kind.empty()) s.bind(1, kind);
    std::vector<AuditEntry> out;
    while (s.step()) out.push_back({static_cast<long>(s.i64(0)), s.text(1), s.text(2), nlohmann::json::parse(s.text(3))});
    return out;
}

void Store::put_rule(const StoredRule& r) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO alarm_rules(id, variable, lo, hi, severity) VALUES(?,?,?,?,?)");
    s.bind(1, r.id).bind(2, r.variable).bind(3, r.lo).bind(4, r.hi).bind(5, r.severity);
    s.run();
}

std::vector<StoredRule> Store::rules() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT id, variable, lo, hi, severity FROM alarm_rules ORDER BY id");
    std::vector<StoredRule> out;
    while (s.step()) out.push_back({s.i32(0), s.text(1), s.f64(2), s.f64(3), s.text(4)});
    return out;
}

long Store::add_alarm(const StoredAlarm& a) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT INTO alarm_events(at, house, variable, value, rule_id, severity) VALUES(?,?,?,?,?,?)");
    s.bind(1, a.at.empty() ? now_iso() : a.at).bind(2, static_cast<int>(a.house)).bind(3, a.variable);
    s.bind(4, a.value).bind(5, a.rule_id).bind(6, a.severity);
    s.run();
    return static_cast<long>(sqlite3_last_insert_rowid(db_));
}

std::vector<StoredAlarm> Store::alarms(int limit) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT id, at, house, variable, value, rule_id, severity FROM alarm_events ORDER BY id DESC LIMIT ?");
    s.bind(1, limit);
    std::vector<StoredAlarm> out;
    while (s.step())
        out.push_back({static_cast<long>(s.i64(0)), s.text(1), static_cast<std::uint8_t>(s.i32(2)), s.text(3), s.f64(4),
                       s.i32(5), s.text(6)});
    return out;
}

void Store::put_job(const JobRecord& j) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO jobs(id, kind, status, created_at, finished_at, result, error) "
                "VALUES(?,?,?,?,?,?,?)");
    s.bind(1, j.id).bind(2, j.kind).bind(3, j.status).bind(4, j.created_at.empty() ? now_iso() : j.created_at);
    s.bind(5, j.finished_at).bind(6, j.result.is_null() ? std::string() : j.result.dump()).bind(7, j.error);
    s.run();
}

std::optional<JobRecord> Store::job(const std::string& id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT kind, status, created_at, finished_at, result, error FROM jobs WHERE id = ?");
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    JobRecord j;
    j.id = id;
    j.kind = s.text(0);
    j.status = s.text(1);
    j.created_at = s.text(2);
    j.finished_at = s.text(3);
    const std::string result = s.text(4);
    if (!result.empty()) j.result = nlohmann::json::parse(result);
    j.error = s.text(5);
    return j;
}

int Store::interrupt_running_jobs() {
    std::lock_guard lock(mu_);
    Stmt s(db_, "UPDATE jobs SET status = 'interrupted', finished_at = ? WHERE status IN ('queued', 'running')");
    s.bind(1, now_iso());
    s.run();
    return sqlite3_changes(db_);
}

void Store::set_meta(const std::string& key, const nlohmann::json& value) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO meta(key, value) VALUES(?,?)");
    s.bind(1, key).bind(2, value.dump());
    s.run();
}

std::optional<nlohmann::json> Store::meta(const std::string& key) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT value FROM meta WHERE key = ?");
    s.bind(1, key);
    if (!s.step()) return std::nullopt;
    return nlohmann::json::parse(s.text(0));
}

} // namespace flockplan::supervisor
