#include <doctest.h>

#include <httplib.h>

#include <algorithm>

#include "flockplan/condosim/condominium.hpp"
#include "flockplan/planner/report.hpp"
#include "flockplan/supervisor/api.hpp"
#include "flockplan/supervisor/service.hpp"

using namespace flockplan;
using namespace flockplan::supervisor;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

const std::vector<FlockSample>& corpus() {
    static const auto c = dataset::generate_corpus(dataset::GeneratorConfig{}, 6);
    return c;
}

const surrogate::ModelSet& tiny_models() {
    static const auto m = [] {
        surrogate::Hyperparams hp;
        hp.epochs = 20;
        hp.hidden_size = 3;
        hp.restarts = 1;
        return surrogate::train_models(corpus(), corpus(), hp);
    }();
    return m;
}

protocol::Telemetry reading(double t_max, std::uint32_t dm = 10) {
    protocol::Telemetry t;
    t.flock_id = 1;
    t.day = 5;
    t.t_min = 28.0, t.t_avg = 30.0, t.t_max = t_max;
    t.h_min = 60.0, t.h_avg = 65.0, t.h_max = 70.0;
    t.mdw_g = 150;
    t.dm = dm;
    t.nlb = 30000;
    return t;
}

// A condominium on a local port and a service supervising it.
struct Site {
    condosim::Condominium condo;
    std::unique_ptr<Service> service;

    explicit Site(int houses = 3, std::chrono::milliseconds timeout = 150ms)
        : condo(condosim::CondoConfig::default_condo(houses)) {
        ServiceConfig cfg;
        cfg.master.endpoint = condo.serve({"127.0.0.1", 0});
        cfg.master.timeout = timeout;
        cfg.houses.clear();
        for (auto a : condo.addresses()) cfg.houses.push_back(a);
        cfg.ga.pop_size = 8;
        cfg.ga.max_generations = 3;
        cfg.ga.stall_generations = 0;
        service = std::make_unique<Service>(cfg, tiny_models(), corpus());
    }
    ~Site() {
        service.reset();
        condo.stop();
    }
};

std::vector<DayPlan> comfort() { return dataset::comfort_plans(dataset::GeneratorConfig{}); }

} // namespace

TEST_CASE("store") {
    Store s(":memory:");
    FlockRecord f{0, 2, FlockStatus::Active, 34800, {150.0, 16.0, 34800}, 42.0, now_iso(), {}};
    f.id = 11;
    s.insert_flock(f);
    REQUIRE(s.active_flock(2).has_value());
    CHECK(s.active_flock(2)->id == 11);
    auto second = f;
    second.id = 12;
    CHECK_THROWS_AS(s.insert_flock(second), StorageError);

    auto t = reading(30.0);
    t.flock_id = 11;
    s.put_telemetry({2, t, now_iso()});
    t.dm = 99;
    s.put_telemetry({2, t, now_iso()});
    auto days = s.telemetry(11);
    REQUIRE(days.size() == 1);
    CHECK(days[0].reading.dm == 99);

    s.set_flock_status(11, FlockStatus::Complete);
    CHECK_FALSE(s.active_flock(2).has_value());
    CHECK(s.flock(11)->status == FlockStatus::Complete);

    s.set_meta("k", json{{"a", 1}});
    CHECK(s.meta("k")->at("a") == 1);
    CHECK_FALSE(s.meta("missing").has_value());

    s.put_job({"optimize-1", "optimize", "running", now_iso(), {}, json::object(), {}});
    CHECK(s.interrupt_running_jobs() == 1);
    CHECK(s.job("optimize-1")->status == "interrupted");

    CHECK_THROWS_AS(s.add_alarm({0, now_iso(), 1, "t_max", 40.0, 77, "high"}), StorageError);
    CHECK(s.audit("x", {{"n", 1}}) > 0);
    CHECK(s.audit_log("x").size() == 1);
}

TEST_CASE("alarm evaluation") {
    auto rules = default_rules();
    CHECK_NOTHROW(validate_rules(rules));
    AlarmDedup dedup;
    const auto t0 = std::chrono::system_clock::now();

    auto events = evaluate_alarms({{1, reading(39.0)}}, rules, dedup, t0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].variable == "t_max");
    CHECK(events[0].value == 39.0);
    CHECK(events[0].severity == Severity::High);
    CHECK(events[0].house == 1);

    // the same violation inside the window is not repeated
    CHECK(evaluate_alarms({{1, reading(39.0)}}, rules, dedup, t0 + 10min).empty());
    // another house is independent
    CHECK(evaluate_alarms({{2, reading(39.0)}}, rules, dedup, t0 + 10min).size() == 1);
    // after the window it is raised again
    CHECK(evaluate_alarms({{1, reading(39.0)}}, rules, dedup, t0 + 61min).size() == 1);
    // back in bounds clears it
    CHECK(evaluate_alarms({{1, reading(30.0)}}, rules, dedup, t0 + 62min).empty());
    CHECK(evaluate_alarms({{1, reading(39.0)}}, rules, dedup, t0 + 63min).size() == 1);

    CHECK(evaluate_alarms({{3, reading(30.0, 600)}}, rules, dedup, t0).size() == 1);

    auto bad = rules;
    bad.push_back({9, "colour", 0.0, 1.0, Severity::Low});
    CHECK_THROWS_AS(validate_rules(bad), ConfigDomain);
    bad = rules;
    bad.push_back({1, "t_min", 0.0, 1.0, Severity::Low});
    CHECK_THROWS_AS(validate_rules(bad), ConfigDomain);
}

TEST_CASE("adaptive thresholds") {
    CHECK(required_new_flocks(12, 0.25) == 3);
    CHECK(required_new_flocks(10, 0.25) == 3);
    CHECK(required_new_flocks(1, 0.25) == 1);

    auto d = adaptive_cycle({corpus()[0]}, corpus(), tiny_models());
    CHECK_FALSE(d.retrain());
    CHECK_FALSE(d.evaluated);
    CHECK(d.required == 2);
}

TEST_CASE("error mapping") {
    CHECK(http_status_for(NotFound("x")) == 404);
    CHECK(http_status_for(StaleDay("x")) == 409);
    CHECK(http_status_for(NoActiveFlock("x")) == 409);
    CHECK(http_status_for(JobNotReady("x")) == 409);
    CHECK(http_status_for(OutOfRange("x")) == 400);
    CHECK(http_status_for(Timeout("x")) == 502);
    CHECK(http_status_for(std::runtime_error("x")) == 500);
    auto body = json::parse(error_body(OutOfRange("day 0")));
    CHECK(body["error"]["kind"] == "OutOfRange");
    CHECK(body["error"]["message"] == "day 0");
    CHECK(body.contains("timestamp"));
}

TEST_CASE("service against a simulated condominium") {
    Site site;
    auto& svc = *site.service;
    auto views = svc.poll();
    REQUIRE(views.size() == 3);
    for (const auto& v : views) CHECK(v.reachable);
    CHECK(svc.store().flocks().size() == 3);

    SUBCASE("every house acknowledges a daily plan") {
        auto acks = svc.distribute_daily_plan(1, comfort(), "manual");
        CHECK(acks.entries.size() == 3);
        CHECK(acks.failures() == 0);
        for (const auto& e : acks.entries) CHECK(e.retries == 0);
        site.condo.advance_day();
        for (auto a : site.condo.addresses())
            CHECK(site.condo.house(a).applied().back() == protocol::quantize(comfort()[0]));
    }
    SUBCASE("a silent house fails alone") {
        site.condo.slave(2)->inject({1000, 0});
        auto acks = svc.distribute_daily_plan(1, comfort(), "manual");
        REQUIRE(acks.entries.size() == 3);
        CHECK(acks.failures() == 1);
        for (const auto& e : acks.entries) {
            if (e.house == 2) {
                CHECK_FALSE(e.ok);
                CHECK(e.error == "Timeout");
                CHECK(e.retries == 2);
            } else {
                CHECK(e.ok);
                CHECK(e.retries == 0);
            }
        }
        auto alarms = svc.alarms();
        CHECK(std::any_of(alarms.begin(), alarms.end(), [](const json& a) { return a["variable"] == "link"; }));
    }
    SUBCASE("out-of-range days are refused before sending") {
        svc.master().clear_events();
        CHECK_THROWS_AS(svc.distribute_daily_plan(0, comfort(), "manual"), OutOfRange);
        CHECK_THROWS_AS(svc.distribute_daily_plan(41, comfort(), "manual"), OutOfRange);
        CHECK(svc.master().events().empty());
    }
    SUBCASE("operator mortality") {
        for (int t = 0; t < 11; ++t) site.condo.advance_day();
        svc.poll();
        auto zero = svc.record_mortality(1, 12, 0, "op");
        CHECK(zero["pending_for_day"] == 0);
        CHECK_THROWS_AS(svc.record_mortality(1, 11, 5, "op"), StaleDay);
        CHECK_THROWS_AS(svc.record_mortality(1, 12, -1, "op"), OutOfRange);
        CHECK_THROWS_AS(svc.record_mortality(9, 12, 1, "op"), NotFound);

        auto before = site.condo.house(1);
        auto out = svc.record_mortality(1, 12, 50, "op");
        CHECK(out["pending_for_day"] == 50);
        CHECK(site.condo.house(1).pending_mortality() == 50);
        site.condo.advance_day();
        auto after = site.condo.house(1);
        CHECK(after.ledger().back().dm >= 50);
        CHECK(after.ledger().back().nlb == before.ledger().back().nlb - after.ledger().back().dm);
        CHECK(svc.store().mortality(static_cast<int>(after.flock_id())).size() == 1);
    }
    SUBCASE("no active flock once the houses finish") {
        for (int t = 0; t < kFlockDays; ++t) {
            site.condo.advance_day();
            svc.poll();
        }
        CHECK_THROWS_AS(svc.record_mortality(1, 41, 1, "op"), NoActiveFlock);
        for (const auto& f : svc.store().flocks()) CHECK(f.status == FlockStatus::Complete);
        auto report = svc.flock_report(svc.store().flocks().front().id);
        // day 0 plus one reading per polled day
        CHECK(report["days"].size() == 41);
        CHECK(report.contains("fcr_measured"));
    }
}

TEST_CASE("optimise, approve and follow the plan") {
    Site site;
    auto& svc = *site.service;
    svc.poll();
    CHECK_THROWS_AS(svc.approve("optimize-99"), NotFound);
    auto id = svc.start_optimize();
    auto done = svc.wait_job(id);
    REQUIRE(done["status"] == "done");
    auto plan = planner::plan_from_json(done["result"]["plan"]).expand();

    auto acks = svc.approve(id);
    CHECK(acks.entries.size() == 3);
    CHECK(acks.failures() == 0);
    for (const auto& e : acks.entries) CHECK(e.day == 1);
    // nothing new to send until the houses move on
    CHECK(svc.distribute_next().entries.empty());

    for (int t = 1; t <= 3; ++t) {
        site.condo.advance_day();
        auto sent = svc.tick();
        REQUIRE(sent.has_value());
        CHECK(sent->entries.size() == 3);
        for (const auto& e : sent->entries) CHECK(e.day == t + 1);
    }
    for (auto a : site.condo.addresses()) {
        const auto house = site.condo.house(a);
        for (int d = 0; d < 3; ++d) CHECK(house.applied()[d] == protocol::quantize(plan[d]));
    }
    auto current = svc.current_plan();
    REQUIRE(current.has_value());
    CHECK((*current)["job_id"] == id);
}

TEST_CASE("HTTP API") {
    Site site;
    ApiServer api(*site.service, {"127.0.0.1", 0});
    httplib::Client http("127.0.0.1", api.port());
    http.set_read_timeout(60, 0);

    auto get = [&](const std::string& path) {
        auto r = http.Get(("/api/v1" + path).c_str());
        REQUIRE(r);
        return std::make_pair(r->status, json::parse(r->body));
    };
    auto post = [&](const std::string& path, const json& body) {
        auto r = http.Post(("/api/v1" + path).c_str(), body.dump(), "application/json");
        REQUIRE(r);
        return std::make_pair(r->status, json::parse(r->body));
    };

    auto [hs, houses] = get("/houses?refresh=1");
    CHECK(hs == 200);
    REQUIRE(houses["houses"].size() == 3);
    for (const auto& h : houses["houses"]) CHECK(h["reachable"] == true);
    // house 3 drops off the network once its flock is known
    site.condo.slave(3)->inject({100000, 0});
    auto [hs2, again] = get("/houses?refresh=1");
    CHECK(again["houses"][2]["reachable"] == false);
    CHECK(again["houses"][0]["reachable"] == true);

    auto [ps, none] = get("/plan/current");
    CHECK(ps == 404);
    CHECK(none["error"]["kind"] == "NotFound");

    auto [js, missing] = get("/jobs/optimize-42");
    CHECK(js == 404);

    auto [ms, bad] = post("/houses/1/mortality", {{"day", 7}, {"count", 3}});
    CHECK(ms == 409);
    CHECK(bad["error"]["kind"] == "StaleDay");
    auto [ns, neg] = post("/houses/1/mortality", {{"day", 1}, {"count", -3}});
    CHECK(ns == 400);
    auto [mf, malformed] = post("/houses/1/mortality", {{"count", 3}});
    CHECK(mf == 400);
    auto [ok, recorded] = post("/houses/1/mortality", {{"day", 1}, {"count", 3}, {"operator", "ana"}});
    CHECK(ok == 200);
    CHECK(recorded["pending_for_day"] == 3);

    auto [os, job] = post("/plan/optimize", json::object());
    CHECK(os == 202);
    const std::string id = job["job_id"];
    auto [early, notready] = post("/plan/approve", {{"job_id", "adaptive-1"}});
    CHECK(early == 404);
    site.service->wait_job(id);
    auto [gs, status] = get("/jobs/" + id);
    CHECK(gs == 200);
    CHECK(status["status"] == "done");

    auto [as, acks] = post("/plan/approve", {{"job_id", id}});
    CHECK(as == 200);
    CHECK(acks["acks"] == 2);
    CHECK(acks["failures"] == 1);
    for (const auto& e : acks["entries"])
        if (e["house"] == 3) CHECK(e["error"] == "Timeout");

    auto [cs, current] = get("/plan/current");
    CHECK(cs == 200);
    CHECK(current["job_id"] == id);

    auto [als, alarms] = get("/alarms?limit=10");
    CHECK(als == 200);
    CHECK(alarms["alarms"].size() >= 1);
    auto [zl, zero] = get("/alarms?limit=0");
    CHECK(zl == 400);

    auto [ts, tel] = get("/houses/1/telemetry?from=0&to=40");
    CHECK(ts == 200);
    auto [hh, health] = get("/health");
    CHECK(hh == 200);
    CHECK(health["status"] == "ok");
    auto [nf, unknown] = get("/nowhere");
    CHECK(nf == 404);
    api.stop();
}
