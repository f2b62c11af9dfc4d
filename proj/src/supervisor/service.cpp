#include "flockplan/supervisor/service.hpp"

#include <algorithm>
#include <condition_variable>
#include <limits>
#include <set>

#include <spdlog/spdlog.h>

#include "flockplan/dataset/io.hpp"
#include "flockplan/planner/report.hpp"

namespace flockplan::supervisor {

using nlohmann::json;
using protocol::Function;
using protocol::make_request;

struct Service::Job {
    JobRecord record;
    json progress = json::object();
    std::condition_variable done;
};

json to_json(const protocol::Telemetry& t) {
    return {{"flock_id", t.flock_id}, {"day", t.day},     {"t_min", t.t_min}, {"t_avg", t.t_avg},
            {"t_max", t.t_max},       {"h_min", t.h_min}, {"h_avg", t.h_avg}, {"h_max", t.h_max},
            {"mdw_g", t.mdw_g},       {"dfc_kg", t.dfc_g / 1000.0}, {"dm", t.dm}, {"nlb", t.nlb}};
}

json to_json(const HouseView& h) {
    json j{{"address", h.address}, {"reachable", h.reachable}, {"polled_at", h.polled_at}};
    if (!h.error.empty()) j["error"] = h.error;
    if (h.status) {
        const auto& s = *h.status;
        const char* names[] = {"idle", "active", "complete"};
        j["status"] = {{"flock_id", s.flock_id},
                       {"day", s.day},
                       {"state", names[static_cast<int>(s.status)]},
                       {"fallback_days", s.fallback_days},
                       {"initial_birds", s.initial_birds},
                       {"capacity", s.capacity},
                       {"length_m", s.length_dm / 10.0},
                       {"width_m", s.width_dm / 10.0}};
    }
    if (h.telemetry) j["telemetry"] = to_json(*h.telemetry);
    return j;
}

int AckReport::failures() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const AckEntry& e) { return !e.ok; }));
}

json to_json(const AckReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        json j{{"house", e.house}, {"day", e.day}, {"flock_id", e.flock_id}, {"ok", e.ok}, {"retries", e.retries}};
        if (!e.ok) {
            j["error"] = e.error;
            j["message"] = e.message;
        }
        entries.push_back(j);
    }
    return {{"source", r.source}, {"acks", r.entries.size() - static_cast<std::size_t>(r.failures())},
            {"failures", r.failures()}, {"entries", entries}};
}

FlockSample sample_from_records(const FlockRecord& flock, const std::vector<TelemetryRecord>& days) {
    FlockSample s;
    s.flock_id = flock.id;
    s.house = flock.house;
    s.geometry = flock.geometry;
    s.initial_birds = flock.initial_birds;
    s.initial = {flock.arrival_mdw, 0.0, static_cast<double>(flock.initial_birds) / flock.geometry.area_m2()};
    for (const auto& r : days) {
        const auto& t = r.reading;
        if (t.day == 0) continue;
        if (t.day != s.plans.size() + 1)
            throw InsufficientData("flock " + std::to_string(flock.id) + " is missing telemetry for day " +
                                   std::to_string(s.plans.size() + 1));
        s.plans.push_back({t.day, t.t_min, t.t_avg, t.t_max, t.h_min, t.h_avg, t.h_max});
        DayOutcome o;
        o.day = t.day;
        o.mdw = t.mdw_g;
        o.dm = t.dm;
        o.nlb = t.nlb;
        o.dfc = t.dfc_g / 1000.0;
        auto an = normalize_by_area(static_cast<double>(t.dm), static_cast<double>(t.nlb), o.dfc, flock.geometry,
                                    static_cast<double>(t.nlb));
        o.dmpa = an.dmpa;
        o.nlbpa = an.nlbpa;
        o.dfcpb = an.dfcpb;
        s.outcomes.push_back(o);
    }
    if (s.plans.size() != kFlockDays)
        throw InsufficientData("flock " + std::to_string(flock.id) + " has " + std::to_string(s.plans.size()) +
                               " recorded days");
    return s;
}

Service::Service(ServiceConfig config, std::optional<surrogate::ModelSet> models,
                 std::optional<std::vector<FlockSample>> base)
    : config_(std::move(config)), store_(config_.db_path), master_(config_.master), dedup_(config_.alarm_window) {
    config_.ga.validate();
    if (!models && !config_.models_dir.empty()) models = surrogate::load_models(config_.models_dir);
    if (!base && !config_.samples_path.empty()) base = dataset::load_samples(config_.samples_path);
    if (models) models_ = std::make_shared<const surrogate::ModelSet>(std::move(*models));
    if (base) base_ = std::make_shared<const std::vector<FlockSample>>(std::move(*base));
    model_version_ = store_.meta("model_version").value_or(json(models_ ? 1 : 0)).get<int>();

    const int interrupted = store_.interrupt_running_jobs();
    if (interrupted > 0) spdlog::warn("{} job(s) from a previous run marked interrupted", interrupted);

    auto stored = store_.rules();
    if (stored.empty()) {
        rules_ = default_rules();
        for (const auto& r : rules_) store_.put_rule({r.id, r.variable, r.lo, r.hi, to_string(r.severity)});
    } else {
        for (const auto& r : stored) rules_.push_back({r.id, r.variable, r.lo, r.hi, severity_from(r.severity)});
    }
    validate_rules(rules_);
}

Service::~Service() {
    stopping_ = true;
    if (autopilot_.joinable()) autopilot_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lk(jobs_mu_);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
}

int Service::model_version() const {
    std::lock_guard lk(state_mu_);
    return model_version_;
}

std::shared_ptr<const surrogate::ModelSet> Service::models() const {
    std::lock_guard lk(state_mu_);
    return models_;
}

std::vector<FlockSample> Service::base() const {
    std::lock_guard lk(state_mu_);
    return base_ ? *base_ : std::vector<FlockSample>{};
}

void Service::raise_link_alarm(std::uint8_t house, const std::string& why) {
    spdlog::warn("house {}: {}", house, why);
    {
        std::lock_guard lk(state_mu_);
        if (!dedup_.admit(kLinkRuleId, house, std::chrono::system_clock::now())) return;
    }
    store_.add_alarm({0, now_iso(), house, "link", 0.0, kLinkRuleId, to_string(Severity::High)});
}

std::vector<HouseView> Service::poll() {
    std::vector<HouseView> out;
    std::vector<Reading> readings;
    for (std::uint8_t addr : config_.houses) {
        HouseView v;
        v.address = addr;
        v.polled_at = now_iso();
        auto st = master_.try_transact(make_request(addr, Function::ReportStatus));
        std::optional<protocol::Transaction> tr;
        if (st.ok()) {
            v.status = protocol::decode_status(st.reply->payload);
            if (v.status->status != protocol::HouseStatus::Idle) tr = master_.try_transact(make_request(addr, Function::ReadTelemetry));
        }
        const auto& failed = !st.ok() ? st : (tr && !tr->ok() ? *tr : st);
        if (!failed.ok()) {
            v.error = failed.error + ": " + failed.message;
            raise_link_alarm(addr, v.error);
        } else {
            {
                std::lock_guard lk(state_mu_);
                dedup_.clear(kLinkRuleId, addr);
            }
            v.reachable = true;
            if (tr) v.telemetry = protocol::decode_telemetry(tr->reply->payload);
        }

        if (v.status && v.telemetry) {
            const auto& s = *v.status;
            const int fid = static_cast<int>(s.flock_id);
            auto active = store_.active_flock(addr);
            if (active && active->id != fid) {
                store_.set_flock_status(active->id, FlockStatus::Complete);
                store_.audit("flock_closed", {{"flock_id", active->id}, {"house", addr}, {"replaced_by", fid}});
            }
            auto known = store_.flock(fid);
            if (!known) {
                FlockRecord f;
                f.id = fid;
                f.house = addr;
                f.initial_birds = s.initial_birds;
                f.geometry = {s.length_dm / 10.0, s.width_dm / 10.0, static_cast<std::int64_t>(s.capacity)};
                f.arrival_mdw = s.arrival_mg / 1000.0;
                f.started_at = now_iso();
                store_.insert_flock(f);
                store_.audit("flock_opened", {{"flock_id", fid}, {"house", addr}, {"initial_birds", f.initial_birds}});
                known = f;
            }
            if (known->house == addr) {
                store_.put_telemetry({addr, *v.telemetry, v.polled_at});
                readings.push_back({addr, *v.telemetry});
                if (s.status == protocol::HouseStatus::Complete && known->status == FlockStatus::Active) {
                    store_.set_flock_status(fid, FlockStatus::Complete);
                    store_.audit("flock_complete", {{"flock_id", fid}, {"house", addr}});
                }
            } else {
                spdlog::error("house {} reports flock {} which belongs to house {}", addr, fid, known->house);
            }
        }
        out.push_back(v);
    }

    std::vector<AlarmEvent> events;
    {
        std::lock_guard lk(state_mu_);
        events = evaluate_alarms(readings, rules_, dedup_);
        for (const auto& v : out) views_[v.address] = v;
    }
    for (const auto& e : events)
        store_.add_alarm({0, e.timestamp, e.house, e.variable, e.value, e.rule_id, to_string(e.severity)});
    return out;
}

std::vector<HouseView> Service::houses() const {
    std::lock_guard lk(state_mu_);
    std::vector<HouseView> out;
    for (std::uint8_t addr : config_.houses) {
        auto it = views_.find(addr);
        if (it != views_.end()) {
            out.push_back(it->second);
        } else {
            HouseView v;
            v.address = addr;
            v.error = "not polled yet";
            out.push_back(v);
        }
    }
    return out;
}

AckEntry Service::send_plan(std::uint8_t house, std::uint32_t flock_id, const DayPlan& plan,
                            const std::string& source) {
    AckEntry e;
    e.house = house;
    e.day = plan.day;
    e.flock_id = flock_id;
    auto tx = master_.try_transact(
        make_request(house, Function::WriteDayPlan, protocol::encode(protocol::PlanMessage{flock_id, plan})));
    e.retries = tx.retries;
    if (tx.ok()) {
        e.ok = true;
        store_.put_applied_plan({static_cast<int>(flock_id), house, plan, source, now_iso()});
        std::lock_guard lk(state_mu_);
        sent_[house] = {flock_id, plan.day};
        return e;
    }
    e.error = tx.error;
    e.message = tx.message;
    // A refusal is the house answering; only silence or garbage is a link problem.
    if (!tx.exception) raise_link_alarm(house, "plan for day " + std::to_string(plan.day) + " not delivered: " + tx.message);
    return e;
}

AckReport Service::distribute_daily_plan(int day, const std::vector<DayPlan>& plans, const std::string& source) {
    if (day < 1 || day > kFlockDays) throw OutOfRange("plan day " + std::to_string(day) + " is outside 1..40");
    if (plans.size() != kFlockDays) throw ShapeError("a plan has 40 days, got " + std::to_string(plans.size()));
    DayPlan p = protocol::quantize(plans[static_cast<std::size_t>(day - 1)]);
    p.day = day;
    validate(p);

    std::lock_guard lk(house_mu_);
    AckReport r;
    r.source = source;
    for (std::uint8_t addr : config_.houses) {
        auto f = store_.active_flock(addr);
        if (!f) {
            r.entries.push_back({addr, day, 0, false, 0, "NoActiveFlock", "no active flock recorded for the house"});
            continue;
        }
        r.entries.push_back(send_plan(addr, static_cast<std::uint32_t>(f->id), p, source));
    }
    store_.audit("distribute", to_json(r));
    return r;
}

AckReport Service::distribute_next() {
    auto current = current_plan();
    AckReport r;
    if (!current) return r;
    r.source = current->at("job_id").get<std::string>();
    const auto plans = planner::plan_from_json(current->at("plan")).expand();

    std::lock_guard lk(house_mu_);
    for (std::uint8_t addr : config_.houses) {
        auto f = store_.active_flock(addr);
        if (!f) continue;
        auto days = store_.telemetry(f->id);
        const int next = days.empty() ? 1 : days.back().reading.day + 1;
        if (next > kFlockDays) continue;
        {
            std::lock_guard sl(state_mu_);
            auto it = sent_.find(addr);
            if (it != sent_.end() && it->second == std::make_pair(static_cast<std::uint32_t>(f->id), next)) continue;
        }
        DayPlan p = protocol::quantize(plans[static_cast<std::size_t>(next - 1)]);
        p.day = next;
        r.entries.push_back(send_plan(addr, static_cast<std::uint32_t>(f->id), p, r.source));
    }
    if (!r.entries.empty()) store_.audit("distribute", to_json(r));
    return r;
}

json Service::record_mortality(std::uint8_t house, int day, std::int64_t count, const std::string& operator_id) {
    if (count < 0) throw OutOfRange("mortality count cannot be negative");
    if (count > std::numeric_limits<std::uint32_t>::max()) throw OutOfRange("mortality count too large");
    if (std::find(config_.houses.begin(), config_.houses.end(), house) == config_.houses.end())
        throw NotFound("house " + std::to_string(house) + " is not supervised");

    std::lock_guard lk(house_mu_);
    auto f = store_.active_flock(house);
    if (!f) throw NoActiveFlock("house " + std::to_string(house) + " has no active flock");
    auto days = store_.telemetry(f->id);
    const int current = days.empty() ? 1 : days.back().reading.day + 1;
    if (current > kFlockDays) throw NoActiveFlock("flock " + std::to_string(f->id) + " has finished its 40 days");
    if (day != current)
        throw StaleDay("mortality for day " + std::to_string(day) + " but house " + std::to_string(house) +
                       " is on day " + std::to_string(current));

    json detail{{"house", house}, {"flock_id", f->id}, {"day", day}, {"count", count}, {"operator", operator_id}};
    if (count > 0) {
        protocol::MortalityMessage m{static_cast<std::uint32_t>(f->id), static_cast<std::uint16_t>(day),
                                     static_cast<std::uint32_t>(count)};
        try {
            master_.transact(make_request(house, Function::InjectMortality, protocol::encode(m)));
        } catch (const SlaveException& e) {
            if (e.code() == static_cast<int>(protocol::ExceptionCode::IllegalDataValue))
                throw StaleDay("house " + std::to_string(house) + " refused day " + std::to_string(day) +
                               "; it has moved on");
            throw;
        }
        store_.add_mortality({f->id, house, day, count, operator_id, now_iso()});
    }
    store_.audit("mortality", detail);

    std::int64_t pending = 0;
    for (const auto& m : store_.mortality(f->id))
        if (m.day == day) pending += m.count;
    detail["pending_for_day"] = pending;
    if (!days.empty()) detail["latest"] = to_json(days.back().reading);
    return detail;
}

std::string Service::new_job(const std::string& kind) {
    std::lock_guard lk(jobs_mu_);
    const int n = store_.meta("job_counter").value_or(json(0)).get<int>() + 1;
    store_.set_meta("job_counter", n);
    auto job = std::make_shared<Job>();
    job->record.id = kind + "-" + std::to_string(n);
    job->record.kind = kind;
    job->record.status = "running";
    job->record.created_at = now_iso();
    store_.put_job(job->record);
    jobs_[job->record.id] = job;
    return job->record.id;
}

void Service::finish_job(const std::string& id, const json& result, const std::string& error) {
    std::lock_guard lk(jobs_mu_);
    auto& job = jobs_.at(id);
    job->record.status = error.empty() ? "done" : "failed";
    job->record.result = result;
    job->record.error = error;
    job->record.finished_at = now_iso();
    store_.put_job(job->record);
    job->done.notify_all();
}

std::string Service::start_optimize(const json& body) {
    if (!body.is_null() && !body.is_object()) throw ConfigDomain("optimize overrides must be a JSON object");
    const json overrides = body.is_null() ? json::object() : body;
    auto models = this->models();
    if (!models) throw InsufficientData("no surrogate models loaded");
    auto corpus = base();
    if (corpus.empty()) throw InsufficientData("no base dataset loaded to derive the search space from");

    evolve::GaConfig ga = config_.ga;
    if (overrides.contains("ga")) {
        json g = ga;
        g.merge_patch(overrides.at("ga"));
        ga = g.get<evolve::GaConfig>();
    }
    ga.validate();
    const double coverage = overrides.value("coverage", config_.coverage);
    if (!(coverage > 0.0 && coverage <= 1.0)) throw ConfigDomain("coverage must lie in (0, 1]");
    const int version = model_version();

    const std::string id = new_job("optimize");
    std::lock_guard lk(jobs_mu_);
    workers_.emplace_back([this, id, models, corpus = std::move(corpus), ga, coverage, version] {
        try {
            auto space = planner::tighten_to_reachable(*models, planner::derive_search_space(corpus), coverage);
            auto res = planner::optimize_flock(*models, space, ga, [&](int week, const evolve::GenerationStats& g) {
                std::lock_guard pl(jobs_mu_);
                jobs_.at(id)->progress = {{"week", week}, {"generation", g.generation}, {"best", g.best},
                                          {"evaluations", g.evaluations}};
            });
            json result{{"plan", planner::plan_to_json(res.plan, res.report.fcr_est, res.report.fcr_res)},
                        {"report", planner::report_to_json(res.report)},
                        {"model_version", version}};
            finish_job(id, result, {});
        } catch (const std::exception& e) {
            spdlog::error("optimize job {} failed: {}", id, e.what());
            finish_job(id, {}, e.what());
        }
    });
    return id;
}

std::string Service::start_adaptive() {
    auto models = this->models();
    if (!models) throw InsufficientData("no surrogate models loaded");
    const std::string id = new_job("adaptive");
    std::lock_guard lk(jobs_mu_);
    workers_.emplace_back([this, id, models] {
        try {
            std::vector<FlockSample> history;
            for (const auto& f : store_.flocks()) {
                if (f.status != FlockStatus::Complete) continue;
                try {
                    history.push_back(sample_from_records(f, store_.telemetry(f.id)));
                } catch (const InsufficientData& e) {
                    spdlog::warn("adaptive cycle skips flock {}: {}", f.id, e.what());
                }
            }
            auto corpus = base();
            const auto consumed = store_.meta("consumed_flocks").value_or(json::array());
            std::erase_if(history, [&](const FlockSample& s) {
                return std::find(consumed.begin(), consumed.end(), json(s.flock_id)) != consumed.end();
            });

            auto decision = adaptive_cycle(history, corpus, *models, config_.adaptive);
            for (int fid : decision.rejected) store_.set_flock_status(fid, FlockStatus::RejectedOutlier);
            json result = to_json(decision);
            if (decision.retrain()) {
                auto fresh = surrogate::train_models(decision.dataset, decision.dataset, config_.retrain);
                int version = 0;
                {
                    std::lock_guard sl(state_mu_);
                    models_ = std::make_shared<const surrogate::ModelSet>(std::move(fresh));
                    base_ = std::make_shared<const std::vector<FlockSample>>(decision.dataset);
                    version = ++model_version_;
                }
                store_.set_meta("model_version", version);
                json used = consumed;
                for (int fid : decision.accepted) used.push_back(fid);
                store_.set_meta("consumed_flocks", used);
                if (!config_.models_dir.empty()) {
                    auto dir = config_.models_dir / ("v" + std::to_string(version));
                    surrogate::save_models(*this->models(), dir);
                    result["models_dir"] = dir.string();
                }
                result["model_version"] = version;
            } else {
                result["model_version"] = model_version();
            }
            store_.audit("adaptive", result);
            finish_job(id, result, {});
        } catch (const std::exception& e) {
            spdlog::error("adaptive job {} failed: {}", id, e.what());
            finish_job(id, {}, e.what());
        }
    });
    return id;
}

namespace {

json job_json(const JobRecord& r) {
    json j{{"id", r.id}, {"kind", r.kind}, {"status", r.status}, {"created_at", r.created_at}};
    if (!r.finished_at.empty()) j["finished_at"] = r.finished_at;
    if (!r.result.is_null()) j["result"] = r.result;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

} // namespace

std::optional<json> Service::job(const std::string& id) const {
    {
        std::lock_guard lk(jobs_mu_);
        auto it = jobs_.find(id);
        if (it != jobs_.end()) {
            auto j = job_json(it->second->record);
            j["progress"] = it->second->progress;
            return j;
        }
    }
    if (auto r = store_.job(id)) return job_json(*r);
    return std::nullopt;
}

json Service::wait_job(const std::string& id) {
    {
        std::unique_lock lk(jobs_mu_);
        auto it = jobs_.find(id);
        if (it != jobs_.end()) {
            auto job = it->second;
            job->done.wait(lk, [&] { return job->record.status != "running"; });
        }
    }
    auto j = job(id);
    if (!j) throw NotFound("no job " + id);
    return *j;
}

AckReport Service::approve(const std::string& job_id) {
    auto j = job(job_id);
    if (!j) throw NotFound("no job " + job_id);
    if (j->at("kind") != "optimize") throw JobNotReady("job " + job_id + " is not an optimisation");
    if (j->at("status") != "done") throw JobNotReady("job " + job_id + " is " + j->at("status").get<std::string>());
    const auto& result = j->at("result");
    planner::plan_from_json(result.at("plan")).expand(); // refuse a plan that no longer parses

    json current{{"job_id", job_id},
                 {"approved_at", now_iso()},
                 {"model_version", result.value("model_version", 0)},
                 {"fcr_est", result.at("plan").at("fcr_est")},
                 {"fcr_res", result.at("plan").at("fcr_res")},
                 {"plan", result.at("plan")}};
    store_.set_meta("current_plan", current);
    {
        std::lock_guard lk(state_mu_);
        sent_.clear();
    }
    store_.audit("approve", {{"job_id", job_id}});
    poll();
    return distribute_next();
}

std::optional<json> Service::current_plan() const { return store_.meta("current_plan"); }

std::optional<AckReport> Service::tick() {
    poll();
    if (!current_plan()) return std::nullopt;
    return distribute_next();
}

void Service::start_autopilot(std::chrono::milliseconds every) {
    if (autopilot_.joinable()) throw ConfigDomain("autopilot already running");
    autopilot_ = std::thread([this, every] {
        while (!stopping_) {
            try {
                tick();
            } catch (const std::exception& e) {
                spdlog::error("supervision tick failed: {}", e.what());
            }
            auto until = std::chrono::steady_clock::now() + every;
            while (!stopping_ && std::chrono::steady_clock::now() < until)
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    });
}

json Service::alarms(int limit) const {
    json out = json::array();
    for (const auto& a : store_.alarms(limit))
        out.push_back({{"id", a.id},
                       {"timestamp", a.at},
                       {"house", a.house},
                       {"variable", a.variable},
                       {"value", a.value},
                       {"rule_id", a.rule_id},
                       {"severity", a.severity}});
    return out;
}

json Service::telemetry(std::uint8_t house, int from_day, int to_day, std::optional<int> flock_id) const {
    if (from_day < 0 || to_day > kFlockDays || from_day > to_day)
        throw OutOfRange("day range must satisfy 0 <= from <= to <= 40");
    std::optional<FlockRecord> f;
    if (flock_id) {
        f = store_.flock(*flock_id);
        if (!f || f->house != house) throw NotFound("no flock " + std::to_string(*flock_id) + " in that house");
    } else {
        f = store_.active_flock(house);
        if (!f) {
            for (const auto& r : store_.flocks())
                if (r.house == house && (!f || r.id > f->id)) f = r;
        }
        if (!f) throw NotFound("house " + std::to_string(house) + " has no recorded flock");
    }
    json days = json::array();
    for (const auto& r : store_.telemetry(f->id, from_day, to_day)) {
        auto j = to_json(r.reading);
        j["recorded_at"] = r.recorded_at;
        days.push_back(j);
    }
    return {{"house", house}, {"flock_id", f->id}, {"days", days}};
}

json Service::flock_report(int flock_id) const {
    auto f = store_.flock(flock_id);
    if (!f) throw NotFound("no flock " + std::to_string(flock_id));
    json days = json::array();
    std::optional<double> fcr;
    for (const auto& r : store_.telemetry(flock_id)) {
        auto j = to_json(r.reading);
        if (r.reading.day > 0 && r.reading.nlb > 0 && r.reading.mdw_g > 0) {
            fcr = fcr_basic(r.reading.dfc_g / 1000.0, r.reading.nlb, r.reading.mdw_g);
            j["fcr"] = *fcr;
        }
        days.push_back(j);
    }
    json mortality = json::array();
    for (const auto& m : store_.mortality(flock_id))
        mortality.push_back({{"day", m.day}, {"count", m.count}, {"operator", m.operator_id}, {"recorded_at", m.recorded_at}});
    json plans = json::array();
    std::set<std::string> sources;
    for (const auto& p : store_.applied_plans(flock_id)) {
        plans.push_back({{"plan", p.plan}, {"source", p.source}, {"distributed_at", p.distributed_at}});
        sources.insert(p.source);
    }
    json j{{"flock_id", f->id},
           {"house", f->house},
           {"status", to_string(f->status)},
           {"initial_birds", f->initial_birds},
           {"geometry", {{"length_m", f->geometry.length_m}, {"width_m", f->geometry.width_m}, {"capacity", f->geometry.capacity}}},
           {"arrival_mdw_g", f->arrival_mdw},
           {"started_at", f->started_at},
           {"days", days},
           {"mortality", mortality},
           {"applied_plans", plans},
           {"plan_sources", sources}};
    if (!f->completed_at.empty()) j["completed_at"] = f->completed_at;
    if (fcr) j["fcr_measured"] = *fcr;
    for (const auto& src : sources) {
        auto job = store_.job(src);
        if (job && job->status == "done") j["predicted"][src] = {{"fcr_est", job->result.at("plan").at("fcr_est")},
                                                                 {"fcr_res", job->result.at("plan").at("fcr_res")}};
    }
    return j;
}

} // namespace flockplan::supervisor
