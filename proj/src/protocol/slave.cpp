#include "flockplan/protocol/slave.hpp"

#include <spdlog/spdlog.h>

namespace flockplan::protocol {

std::optional<Frame> slave_handle(Device& device, std::uint8_t address, const Frame& request) {
    const bool broadcast = request.address == kBroadcast;
    if (!broadcast && request.address != address) return std::nullopt;
    if (broadcast && request.function != static_cast<std::uint8_t>(Function::WriteDayPlan)) return std::nullopt;

    auto reply_with = [&](std::vector<std::uint8_t> payload) -> std::optional<Frame> {
        if (broadcast) return std::nullopt;
        return Frame{address, request.function, std::move(payload)};
    };
    auto refuse = [&](ExceptionCode code) -> std::optional<Frame> {
        if (broadcast) return std::nullopt;
        Frame f = make_exception(request, code);
        f.address = address;
        return f;
    };

    try {
        switch (static_cast<Function>(request.function)) {
        case Function::ReadTelemetry:
            if (!request.payload.empty()) return refuse(ExceptionCode::IllegalDataValue);
            return reply_with(encode(device.telemetry()));
        case Function::ReportStatus:
            if (!request.payload.empty()) return refuse(ExceptionCode::IllegalDataValue);
            return reply_with(encode(device.status()));
        case Function::WriteDayPlan: {
            if (request.payload.size() != kPlanSize) return refuse(ExceptionCode::IllegalDataValue);
            PlanMessage m = decode_plan(request.payload);
            if (!is_valid(m.plan)) return refuse(ExceptionCode::IllegalDataValue);
            if (auto code = device.write_plan(m)) return refuse(*code);
            return reply_with(encode(m));
        }
        case Function::ReadDayPlan: {
            if (request.payload.size() != 2) return refuse(ExceptionCode::IllegalDataValue);
            auto m = device.read_plan(decode_day(request.payload));
            if (!m) return refuse(ExceptionCode::IllegalDataAddress);
            return reply_with(encode(*m));
        }
        case Function::InjectMortality: {
            if (request.payload.size() != kMortalitySize) return refuse(ExceptionCode::IllegalDataValue);
            MortalityMessage m = decode_mortality(request.payload);
            if (auto code = device.inject_mortality(m)) return refuse(*code);
            return reply_with(encode(m));
        }
        }
    } catch (const Error& e) {
        spdlog::warn("slave {}: {} while handling function 0x{:02x}", address, e.what(), request.function);
        return refuse(ExceptionCode::DeviceFailure);
    }
    return refuse(ExceptionCode::IllegalFunction);
}

Slave::Slave(std::uint8_t address, std::shared_ptr<Device> device) : address_(address), device_(std::move(device)) {
    if (address == kBroadcast || address > kMaxAddress)
        throw AddressCollision("slave address " + std::to_string(address) + " is outside 1..247");
}

void Slave::inject(const FaultPlan& faults) {
    std::lock_guard lock(mu_);
    faults_ = faults;
}

void Slave::deliver(const Frame& f, Delivery& out) {
    if (f.address != address_ && f.address != kBroadcast) return;
    std::lock_guard lock(mu_);
    ++seen_;
    ++out.leaves;
    if (faults_.drop_next > 0) {
        --faults_.drop_next;
        return;
    }
    auto reply = slave_handle(*device_, address_, f);
    if (!reply) return;
    auto bytes = encode_frame(*reply);
    if (faults_.corrupt_next > 0) {
        --faults_.corrupt_next;
        bytes.back() ^= 0x01; // keeps the length intact so the master sees a CRC error, not a stall
    }
    out.replies.push_back(std::move(bytes));
}

void Switch::attach(std::shared_ptr<Node> child) {
    auto mine = addresses();
    for (auto a : child->addresses())
        if (mine.count(a)) throw AddressCollision("address " + std::to_string(a) + " is already on this switch");
    children_.push_back(std::move(child));
}

std::set<std::uint8_t> Switch::addresses() const {
    std::set<std::uint8_t> all;
    for (const auto& c : children_) {
        auto s = c->addresses();
        all.insert(s.begin(), s.end());
    }
    return all;
}

void Switch::deliver(const Frame& f, Delivery& out) {
    for (const auto& c : children_) {
        if (f.address == kBroadcast || c->addresses().count(f.address)) c->deliver(f, out);
    }
}

BusServer::BusServer(std::shared_ptr<Node> root, const Endpoint& ep)
    : root_(std::move(root)), listener_(ep), host_(ep.host) {
    acceptor_ = std::thread([this] { accept_loop(); });
}

Endpoint BusServer::endpoint() const { return Endpoint{host_.empty() ? "127.0.0.1" : host_, port()}; }

void BusServer::accept_loop() {
    while (!stop_) {
        Connection c = listener_.accept(std::chrono::milliseconds(50));
        if (!c.is_open()) continue;
        auto shared = std::make_shared<Connection>(std::move(c));
        std::lock_guard lock(mu_);
        if (stop_) break;
        connections_.push_back(shared);
        workers_.emplace_back([this, shared] { serve(shared); });
    }
}

void BusServer::serve(std::shared_ptr<Connection> c) {
    while (!stop_) {
        std::vector<std::uint8_t> raw;
        try {
            // stop() shuts the socket down, which ends this wait
            raw = c->receive_raw(std::chrono::hours(1));
        } catch (const Timeout&) {
            continue;
        } catch (const Error&) {
            return; // closed, cut or unframeable stream
        }
        Frame f;
        try {
            f = decode_frame(raw);
        } catch (const Error& e) {
            spdlog::debug("bus: dropped frame ({})", e.what());
            continue;
        }
        Delivery d;
        root_->deliver(f, d);
        if (d.replies.size() > 1) spdlog::error("bus: {} replies to one frame for address {}", d.replies.size(), f.address);
        try {
            if (!d.replies.empty()) c->send(d.replies.front());
        } catch (const Error&) {
            return;
        }
    }
}

void BusServer::stop() {
    if (stop_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (auto& c : connections_) c->shutdown();
        workers.swap(workers_);
    }
    for (auto& w : workers)
        if (w.joinable()) w.join();
    listener_.close();
}

} // namespace flockplan::protocol
