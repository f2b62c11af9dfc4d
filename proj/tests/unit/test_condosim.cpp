#include <doctest.h>

#include "flockplan/condosim/condominium.hpp"
#include "flockplan/protocol/master.hpp"

using namespace flockplan;
using namespace flockplan::condosim;

namespace {

HouseConfig first_house() {
    auto spec = dataset::default_houses()[0];
    return {1, spec.geometry, spec.initial_birds, 0};
}

} // namespace

TEST_CASE("a house stepped day by day equals whole-flock generation") {
    dataset::GeneratorConfig cfg;
    auto house = first_house();
    std::mt19937_64 rng(4);
    auto plans = dataset::specialist_plans(cfg, rng);
    HouseSim sim(house, cfg, 9, 1234);
    for (const auto& p : plans) sim.write_plan(p);
    for (int t = 0; t < kFlockDays; ++t) sim.step_day();
    auto ref = dataset::generate_flock(cfg, plans, house.geometry, house.initial_birds, 1234);
    auto s = sim.to_sample();
    CHECK(s.plans == ref.plans);
    CHECK(s.outcomes == ref.outcomes);
    CHECK(s.initial == ref.initial);
    CHECK(sim.fallback_days() == 0);
    CHECK(sim.complete());
    CHECK_THROWS_AS(sim.step_day(), FlockComplete);
}

TEST_CASE("without any plan the house follows the comfort curve") {
    dataset::GeneratorConfig cfg;
    auto house = first_house();
    HouseSim sim(house, cfg, 1, 77);
    for (int t = 0; t < kFlockDays; ++t) sim.step_day();
    CHECK(sim.fallback_days() == 40);
    auto comfort = dataset::comfort_plans(cfg);
    CHECK(sim.applied() == comfort);
    CHECK(sim.to_sample().outcomes ==
          dataset::generate_flock(cfg, comfort, house.geometry, house.initial_birds, 77).outcomes);
}

TEST_CASE("a missing day carries the previous plan") {
    dataset::GeneratorConfig cfg;
    HouseSim sim(first_house(), cfg, 1, 5);
    auto comfort = dataset::comfort_plans(cfg);
    auto p = comfort[0];
    p.t_avg += 0.5;
    sim.write_plan(p);
    sim.step_day();
    sim.step_day();
    CHECK(sim.fallback_days() == 1);
    CHECK(sim.applied()[1].day == 2);
    CHECK(sim.applied()[1].t_avg == p.t_avg);
    // a plan for a day already run is stale
    CHECK_THROWS_AS(sim.write_plan(comfort[1]), StaleDay);
    auto bad = comfort[5];
    bad.t_min = bad.t_max + 1.0;
    CHECK_THROWS_AS(sim.write_plan(bad), InvalidPlan);
}

TEST_CASE("operator mortality is added to the day in progress") {
    dataset::GeneratorConfig cfg;
    HouseSim a(first_house(), cfg, 1, 5), b(first_house(), cfg, 1, 5);
    for (int t = 0; t < 11; ++t) {
        a.step_day();
        b.step_day();
    }
    b.inject_mortality(50);
    CHECK(b.pending_mortality() == 50);
    auto oa = a.step_day();
    auto ob = b.step_day();
    CHECK(ob.dm == oa.dm + 50);
    CHECK(ob.nlb == oa.nlb - 50);
    CHECK(b.pending_mortality() == 0);
}

TEST_CASE("condominiums") {
    SUBCASE("three houses advance together") {
        Condominium condo(CondoConfig::default_condo(3));
        CHECK(condo.addresses() == std::vector<std::uint8_t>{1, 2, 3});
        for (int t = 1; t <= kFlockDays; ++t) {
            auto out = condo.advance_day();
            CHECK(out.size() == 3);
        }
        CHECK(condo.advance_day().empty());
        for (auto a : condo.addresses()) CHECK(condo.house(a).complete());
        condo.restock();
        CHECK(condo.house(1).day() == 0);
        CHECK(condo.house(1).flock_id() == 4);
        CHECK_THROWS_AS(condo.house(9), OutOfRange);
    }
    SUBCASE("a condominium of one") {
        Condominium condo(CondoConfig::default_condo(1));
        CHECK(condo.advance_day().size() == 1);
    }
    SUBCASE("configuration checks") {
        CondoConfig empty;
        CHECK_THROWS_AS(empty.validate(), ConfigDomain);
        auto twice = CondoConfig::default_condo(2);
        twice.houses[1].address = 1;
        CHECK_THROWS_AS(twice.validate(), AddressCollision);
        nlohmann::json j = CondoConfig::default_condo(3);
        auto back = j.get<CondoConfig>();
        CHECK(back.houses.size() == 3);
        CHECK(back.seed == 1);
    }
}

TEST_CASE("a snapshot resumes the same flock") {
    Condominium condo(CondoConfig::default_condo(3));
    for (int t = 0; t < 10; ++t) condo.advance_day();
    auto copy = Condominium::from_snapshot(condo.snapshot());
    for (int t = 0; t < 5; ++t) {
        auto a = condo.advance_day();
        auto b = copy->advance_day();
        CHECK(a == b);
    }
    CHECK(condo.snapshot() == copy->snapshot());
}

TEST_CASE("telemetry over the network matches the house ledger") {
    Condominium condo(CondoConfig::default_condo(3));
    auto ep = condo.serve({"127.0.0.1", 0});
    protocol::Master master({ep, std::chrono::milliseconds(500), 2});

    auto status = protocol::decode_status(master.transact(protocol::make_request(2, protocol::Function::ReportStatus)).payload);
    CHECK(status.day == 0);
    CHECK(status.status == protocol::HouseStatus::Active);

    for (int t = 0; t < 6; ++t) condo.advance_day();
    for (auto a : condo.addresses()) {
        auto reply = master.transact(protocol::make_request(a, protocol::Function::ReadTelemetry));
        auto tel = protocol::decode_telemetry(reply.payload);
        auto h = condo.house(a);
        CHECK(tel == h.telemetry());
        CHECK(tel == protocol::quantize(h.flock_id(), &h.applied().back(), h.ledger().back()));
        CHECK(tel.day == 6);
    }

    // a plan written over the wire is applied on its day
    auto plan = dataset::comfort_plans(condo.config().generator)[6];
    plan.t_avg += 1.0;
    plan.t_max += 1.0;
    protocol::PlanMessage m{condo.house(1).flock_id(), protocol::quantize(plan)};
    master.transact(protocol::make_request(1, protocol::Function::WriteDayPlan, protocol::encode(m)));
    condo.advance_day();
    CHECK(condo.house(1).applied().back() == m.plan);
    CHECK(condo.house(1).fallback_days() == 6);

    // a plan for a day already run is refused
    auto t = master.try_transact(protocol::make_request(1, protocol::Function::WriteDayPlan, protocol::encode(m)));
    CHECK(t.exception == protocol::ExceptionCode::IllegalDataValue);
    condo.stop();
}
