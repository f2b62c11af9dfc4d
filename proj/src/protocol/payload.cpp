#include "flockplan/protocol/payload.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace flockplan::protocol {

namespace {

class Writer {
public:
    explicit Writer(std::size_t n) { out_.reserve(n); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void temperature(double c) { u16(static_cast<std::uint16_t>(fixed<std::int16_t>(c))); }
    void humidity(double h) { u16(fixed<std::uint16_t>(h)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    template <class T>
    static T fixed(double v) {
        const double x = std::round(v * 10.0);
        if (!(x >= std::numeric_limits<T>::min() && x <= std::numeric_limits<T>::max()))
            throw OutOfRange(fmt::format("{} does not fit the x10 fixed-point field", v));
        return static_cast<T>(x);
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> p, std::size_t expected, const char* what) : p_(p) {
        if (p.size() != expected)
            throw ProtocolViolation(fmt::format("{} payload is {} bytes, expected {}", what, p.size(), expected));
    }
    std::uint8_t u8() { return p_[pos_++]; }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>((p_[pos_] << 8) | p_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    double temperature() { return static_cast<std::int16_t>(u16()) / 10.0; }
    double humidity() { return u16() / 10.0; }

private:
    std::span<const std::uint8_t> p_;
    std::size_t pos_ = 0;
};

double tenth(double v) { return std::round(v * 10.0) / 10.0; }

std::uint32_t whole(double v) {
    const double x = std::round(v);
    if (!(x >= 0.0 && x <= std::numeric_limits<std::uint32_t>::max()))
        throw OutOfRange(fmt::format("{} does not fit an unsigned 32-bit field", v));
    return static_cast<std::uint32_t>(x);
}

void put_climate(Writer& w, const DayPlan& p) {
    w.temperature(p.t_min);
    w.temperature(p.t_avg);
    w.temperature(p.t_max);
    w.humidity(p.h_min);
    w.humidity(p.h_avg);
    w.humidity(p.h_max);
}

void get_climate(Reader& r, DayPlan& p) {
    p.t_min = r.temperature();
    p.t_avg = r.temperature();
    p.t_max = r.temperature();
    p.h_min = r.humidity();
    p.h_avg = r.humidity();
    p.h_max = r.humidity();
}

} // namespace

DayPlan quantize(const DayPlan& plan) {
    DayPlan q = plan;
    q.t_min = tenth(plan.t_min);
    q.t_avg = tenth(plan.t_avg);
    q.t_max = tenth(plan.t_max);
    q.h_min = tenth(plan.h_min);
    q.h_avg = tenth(plan.h_avg);
    q.h_max = tenth(plan.h_max);
    return q;
}

Telemetry quantize(std::uint32_t flock_id, const DayPlan* plan, const DayOutcome& outcome) {
    Telemetry t;
    t.flock_id = flock_id;
    t.day = static_cast<std::uint16_t>(outcome.day);
    if (plan) {
        DayPlan q = quantize(*plan);
        t.t_min = q.t_min;
        t.t_avg = q.t_avg;
        t.t_max = q.t_max;
        t.h_min = q.h_min;
        t.h_avg = q.h_avg;
        t.h_max = q.h_max;
    }
    t.mdw_g = whole(outcome.mdw);
    t.dfc_g = whole(outcome.dfc * 1000.0);
    t.dm = static_cast<std::uint32_t>(outcome.dm);
    t.nlb = static_cast<std::uint32_t>(outcome.nlb);
    return t;
}

std::vector<std::uint8_t> encode(const Telemetry& t) {
    Writer w(kTelemetrySize);
    w.u32(t.flock_id);
    w.u16(t.day);
    w.temperature(t.t_min);
    w.temperature(t.t_avg);
    w.temperature(t.t_max);
    w.humidity(t.h_min);
    w.humidity(t.h_avg);
    w.humidity(t.h_max);
    w.u32(t.mdw_g);
    w.u32(t.dfc_g);
    w.u32(t.dm);
    w.u32(t.nlb);
    return w.take();
}

Telemetry decode_telemetry(std::span<const std::uint8_t> p) {
    Reader r(p, kTelemetrySize, "telemetry");
    Telemetry t;
    t.flock_id = r.u32();
    t.day = r.u16();
    t.t_min = r.temperature();
    t.t_avg = r.temperature();
    t.t_max = r.temperature();
    t.h_min = r.humidity();
    t.h_avg = r.humidity();
    t.h_max = r.humidity();
    t.mdw_g = r.u32();
    t.dfc_g = r.u32();
    t.dm = r.u32();
    t.nlb = r.u32();
    return t;
}

std::vector<std::uint8_t> encode(const PlanMessage& m) {
    if (m.plan.day < 0 || m.plan.day > 0xFFFF) throw OutOfRange("plan day does not fit 16 bits");
    Writer w(kPlanSize);
    w.u32(m.flock_id);
    w.u16(static_cast<std::uint16_t>(m.plan.day));
    put_climate(w, m.plan);
    return w.take();
}

PlanMessage decode_plan(std::span<const std::uint8_t> p) {
    Reader r(p, kPlanSize, "day plan");
    PlanMessage m;
    m.flock_id = r.u32();
    m.plan.day = r.u16();
    get_climate(r, m.plan);
    return m;
}

std::vector<std::uint8_t> encode(const StatusReport& s) {
    Writer w(kStatusSize);
    w.u32(s.flock_id);
    w.u16(s.day);
    w.u8(static_cast<std::uint8_t>(s.status));
    w.u16(s.fallback_days);
    w.u32(s.initial_birds);
    w.u32(s.capacity);
    w.u16(s.length_dm);
    w.u16(s.width_dm);
    w.u32(s.arrival_mg);
    return w.take();
}

StatusReport decode_status(std::span<const std::uint8_t> p) {
    Reader r(p, kStatusSize, "status");
    StatusReport s;
    s.flock_id = r.u32();
    s.day = r.u16();
    std::uint8_t st = r.u8();
    if (st > 2) throw ProtocolViolation(fmt::format("unknown house status {}", st));
    s.status = static_cast<HouseStatus>(st);
    s.fallback_days = r.u16();
    s.initial_birds = r.u32();
    s.capacity = r.u32();
    s.length_dm = r.u16();
    s.width_dm = r.u16();
    s.arrival_mg = r.u32();
    return s;
}

std::vector<std::uint8_t> encode(const MortalityMessage& m) {
    Writer w(kMortalitySize);
    w.u32(m.flock_id);
    w.u16(m.day);
    w.u32(m.count);
    return w.take();
}

MortalityMessage decode_mortality(std::span<const std::uint8_t> p) {
    Reader r(p, kMortalitySize, "mortality");
    MortalityMessage m;
    m.flock_id = r.u32();
    m.day = r.u16();
    m.count = r.u32();
    return m;
}

std::vector<std::uint8_t> encode_day(std::uint16_t day) {
    Writer w(2);
    w.u16(day);
    return w.take();
}

std::uint16_t decode_day(std::span<const std::uint8_t> p) {
    Reader r(p, 2, "day");
    return r.u16();
}

} // namespace flockplan::protocol
