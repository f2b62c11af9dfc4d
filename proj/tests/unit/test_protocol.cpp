#include <doctest.h>

#include <map>
#include <thread>

#include "flockplan/protocol/master.hpp"
#include "flockplan/protocol/slave.hpp"

using namespace flockplan;
using namespace flockplan::protocol;
using namespace std::chrono_literals;

namespace {

class FakeDevice : public Device {
public:
    Telemetry telemetry() override {
        std::lock_guard lock(mu_);
        Telemetry t;
        t.flock_id = 7;
        t.day = 12;
        t.t_min = 29.5, t.t_avg = 31.0, t.t_max = 32.5;
        t.h_min = 60.0, t.h_avg = 65.0, t.h_max = 70.0;
        t.mdw_g = 612;
        t.dfc_g = 1234567;
        t.dm = 12;
        t.nlb = 34500;
        return t;
    }
    StatusReport status() override {
        StatusReport s;
        s.flock_id = 7;
        s.day = 12;
        s.status = HouseStatus::Active;
        return s;
    }
    std::optional<ExceptionCode> write_plan(const PlanMessage& m) override {
        std::lock_guard lock(mu_);
        if (m.plan.day <= 12) return ExceptionCode::IllegalDataValue;
        plans[m.plan.day] = m;
        ++writes;
        return std::nullopt;
    }
    std::optional<PlanMessage> read_plan(std::uint16_t day) override {
        std::lock_guard lock(mu_);
        auto it = plans.find(day);
        if (it == plans.end()) return std::nullopt;
        return it->second;
    }
    std::optional<ExceptionCode> inject_mortality(const MortalityMessage&) override { return std::nullopt; }

    std::mutex mu_;
    std::map<int, PlanMessage> plans;
    int writes = 0;
};

struct Bus {
    std::vector<std::shared_ptr<FakeDevice>> devices;
    std::vector<std::shared_ptr<Slave>> slaves;
    std::shared_ptr<Switch> root = std::make_shared<Switch>();
    std::unique_ptr<BusServer> server;

    explicit Bus(int n) {
        for (int a = 1; a <= n; ++a) {
            devices.push_back(std::make_shared<FakeDevice>());
            slaves.push_back(std::make_shared<Slave>(static_cast<std::uint8_t>(a), devices.back()));
            root->attach(slaves.back());
        }
        server = std::make_unique<BusServer>(root, Endpoint{"127.0.0.1", 0});
    }
    MasterConfig master(std::chrono::milliseconds timeout = 300ms) const {
        MasterConfig c;
        c.endpoint = server->endpoint();
        c.timeout = timeout;
        return c;
    }
};

PlanMessage plan_message(int day) {
    return {7, DayPlan{day, 28.0, 30.0, 32.0, 55.0, 65.0, 75.0}};
}

} // namespace

TEST_CASE("crc check value") {
    const std::string s = "123456789";
    std::vector<std::uint8_t> b(s.begin(), s.end());
    CHECK(crc16(b) == 0x4B37);
}

TEST_CASE("frames round-trip") {
    auto req = make_request(5, Function::ReadTelemetry);
    auto bytes = encode_frame(req);
    CHECK(bytes.size() == kMinFrame);
    CHECK(bytes[0] == 5);
    CHECK(bytes[1] == 0x01);
    CHECK(decode_frame(bytes) == req);

    FakeDevice dev;
    Frame reply{5, 0x01, encode(dev.telemetry())};
    CHECK(decode_frame(encode_frame(reply)) == reply);
    CHECK(decode_telemetry(reply.payload) == dev.telemetry());
    CHECK(decode_plan(encode(plan_message(20))) == plan_message(20));

    auto ex = make_exception(req, ExceptionCode::IllegalDataValue);
    CHECK(ex.is_exception());
    CHECK(ex.exception() == ExceptionCode::IllegalDataValue);
    CHECK_FALSE(dump_frame(bytes).empty());
}

TEST_CASE("every single-bit flip is caught") {
    Frame f{3, 0x02, encode(plan_message(14))};
    auto good = encode_frame(f);
    int caught = 0, total = 0;
    for (std::size_t byte = 0; byte < good.size(); ++byte)
        for (int bit = 0; bit < 8; ++bit) {
            auto bad = good;
            bad[byte] ^= static_cast<std::uint8_t>(1u << bit);
            ++total;
            try {
                decode_frame(bad);
            } catch (const CrcMismatch&) {
                ++caught;
            }
        }
    CHECK(caught == total);
}

TEST_CASE("malformed buffers") {
    CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{}), Truncated);
    CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{1, 2, 3}), Truncated);
    Frame big{1, 0x02, std::vector<std::uint8_t>(kMaxPayload + 1, 0)};
    CHECK_THROWS_AS(encode_frame(big), Oversize);
    CHECK_THROWS_AS(encode_frame(Frame{248, 0x01, {}}), ProtocolViolation);
    CHECK_THROWS_AS(decode_telemetry(std::vector<std::uint8_t>(3, 0)), ProtocolViolation);
}

TEST_CASE("slave request handling") {
    FakeDevice dev;
    SUBCASE("other addresses and broadcast reads get no reply") {
        CHECK_FALSE(slave_handle(dev, 2, make_request(3, Function::ReadTelemetry)).has_value());
        CHECK_FALSE(slave_handle(dev, 2, make_request(kBroadcast, Function::ReadTelemetry)).has_value());
    }
    SUBCASE("a plan with t_min above t_max is refused") {
        auto m = plan_message(20);
        std::swap(m.plan.t_min, m.plan.t_max);
        auto r = slave_handle(dev, 2, make_request(2, Function::WriteDayPlan, encode(m)));
        REQUIRE(r.has_value());
        CHECK(r->exception() == ExceptionCode::IllegalDataValue);
        CHECK(dev.writes == 0);
    }
    SUBCASE("a broadcast plan is stored silently") {
        auto r = slave_handle(dev, 2, make_request(kBroadcast, Function::WriteDayPlan, encode(plan_message(20))));
        CHECK_FALSE(r.has_value());
        CHECK(dev.plans.count(20) == 1);
    }
    SUBCASE("unknown functions") {
        auto r = slave_handle(dev, 2, Frame{2, 0x44, {}});
        REQUIRE(r.has_value());
        CHECK(r->exception() == ExceptionCode::IllegalFunction);
    }
}

TEST_CASE("switch tree routing") {
    auto a = std::make_shared<Slave>(1, std::make_shared<FakeDevice>());
    auto b = std::make_shared<Slave>(2, std::make_shared<FakeDevice>());
    auto branch = std::make_shared<Switch>();
    branch->attach(b);
    Switch root;
    root.attach(a);
    root.attach(branch);
    CHECK(root.addresses() == std::set<std::uint8_t>{1, 2});
    CHECK_THROWS_AS(root.attach(std::make_shared<Slave>(2, std::make_shared<FakeDevice>())), AddressCollision);

    Delivery d;
    root.deliver(make_request(2, Function::ReportStatus), d);
    CHECK(d.replies.size() == 1);
    CHECK(a->requests_seen() == 0);
    CHECK(b->requests_seen() == 1);

    Delivery all;
    root.deliver(make_request(kBroadcast, Function::WriteDayPlan, encode(plan_message(30))), all);
    CHECK(all.replies.empty());
    CHECK(all.leaves == 2);
}

TEST_CASE("master over TCP") {
    Bus bus(3);

    SUBCASE("happy path needs no retries") {
        Master m(bus.master());
        for (std::uint8_t a = 1; a <= 3; ++a) {
            int retries = -1;
            auto reply = m.transact(make_request(a, Function::ReadTelemetry), &retries);
            CHECK(retries == 0);
            CHECK(reply.address == a);
            CHECK(decode_telemetry(reply.payload).day == 12);
        }
        CHECK(single_outstanding(m.events()));
    }
    SUBCASE("a dropped request is retried once") {
        Master m(bus.master());
        bus.slaves[1]->inject(FaultPlan{1, 0});
        auto t = m.try_transact(make_request(2, Function::ReportStatus));
        CHECK(t.ok());
        CHECK(t.retries == 1);
        CHECK(bus.slaves[1]->requests_seen() == 2);
    }
    SUBCASE("a corrupted reply is retried") {
        Master m(bus.master());
        bus.slaves[0]->inject(FaultPlan{0, 1});
        auto t = m.try_transact(make_request(1, Function::ReadTelemetry));
        CHECK(t.ok());
        CHECK(t.retries == 1);
    }
    SUBCASE("a silent slave times out after the retries") {
        Master m(bus.master(100ms));
        bus.slaves[2]->inject(FaultPlan{10, 0});
        auto t = m.try_transact(make_request(3, Function::ReadTelemetry));
        CHECK_FALSE(t.ok());
        CHECK(t.error == "Timeout");
        CHECK(t.retries == 2);
        CHECK_THROWS_AS(m.transact(make_request(3, Function::ReadTelemetry)), Timeout);
        // the others still answer
        CHECK(m.try_transact(make_request(1, Function::ReadTelemetry)).ok());
    }
    SUBCASE("refusals surface as slave exceptions") {
        Master m(bus.master());
        try {
            m.transact(make_request(1, Function::WriteDayPlan, encode(plan_message(5))));
            FAIL("expected a refusal");
        } catch (const SlaveException& e) {
            CHECK(e.code() == static_cast<int>(ExceptionCode::IllegalDataValue));
        }
        auto t = m.try_transact(make_request(1, Function::ReadDayPlan, encode_day(33)));
        CHECK(t.exception == ExceptionCode::IllegalDataAddress);
    }
    SUBCASE("writing the same plan twice is idempotent") {
        Master m(bus.master());
        auto req = make_request(2, Function::WriteDayPlan, encode(plan_message(25)));
        auto r1 = m.transact(req);
        auto r2 = m.transact(req);
        CHECK(r1 == r2);
        CHECK(bus.devices[1]->plans.size() == 1);
        auto back = m.transact(make_request(2, Function::ReadDayPlan, encode_day(25)));
        CHECK(decode_plan(back.payload) == plan_message(25));
    }
    SUBCASE("concurrent callers are serialised") {
        Master m(bus.master());
        std::vector<std::thread> callers;
        std::atomic<int> ok{0};
        for (int k = 0; k < 6; ++k)
            callers.emplace_back([&, k] {
                for (int j = 0; j < 10; ++j) {
                    auto a = static_cast<std::uint8_t>(1 + (k + j) % 3);
                    if (m.try_transact(make_request(a, Function::ReportStatus)).ok()) ++ok;
                }
            });
        for (auto& t : callers) t.join();
        CHECK(ok == 60);
        CHECK(single_outstanding(m.events()));
    }
    SUBCASE("broadcast plans reach every house") {
        Master m(bus.master());
        m.broadcast(make_request(kBroadcast, Function::WriteDayPlan, encode(plan_message(21))));
        // a unicast afterwards is answered only once the broadcast was handled
        m.transact(make_request(3, Function::ReportStatus));
        for (auto& d : bus.devices) {
            std::lock_guard lock(d->mu_);
            CHECK(d->plans.count(21) == 1);
        }
    }
}

TEST_CASE("interleaved events are detected") {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<MasterEvent> log{{1, EventKind::Begin, 1, 1, 0, t0},
                                 {2, EventKind::Begin, 2, 1, 0, t0},
                                 {1, EventKind::End, 1, 1, 0, t0},
                                 {2, EventKind::End, 2, 1, 0, t0}};
    CHECK_FALSE(single_outstanding(log));
    std::vector<MasterEvent> fine{{1, EventKind::Begin, 1, 1, 0, t0}, {1, EventKind::End, 1, 1, 0, t0}};
    CHECK(single_outstanding(fine));
}

TEST_CASE("endpoint parsing") {
    CHECK(Endpoint::parse("10.0.0.2:5020").host == "10.0.0.2");
    CHECK(Endpoint::parse("10.0.0.2:5020").port == 5020);
    CHECK(Endpoint::parse(":7").port == 7);
    CHECK(Endpoint::parse("8080").port == 8080);
}
