#include "flockplan/supervisor/api.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flockplan/protocol/frame.hpp"
#include "flockplan/supervisor/service.hpp"

namespace flockplan::supervisor {

using nlohmann::json;

int http_status_for(const std::exception& e) {
    if (dynamic_cast<const NotFound*>(&e)) return 404;
    if (dynamic_cast<const StaleDay*>(&e) || dynamic_cast<const NoActiveFlock*>(&e) ||
        dynamic_cast<const JobNotReady*>(&e) || dynamic_cast<const InsufficientData*>(&e))
        return 409;
    if (dynamic_cast<const OutOfRange*>(&e) || dynamic_cast<const ConfigDomain*>(&e) ||
        dynamic_cast<const InvalidPlan*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const json::exception*>(&e) ||
        dynamic_cast<const std::invalid_argument*>(&e))
        return 400;
    if (dynamic_cast<const Timeout*>(&e) || dynamic_cast<const TransportError*>(&e) ||
        dynamic_cast<const SlaveException*>(&e) || dynamic_cast<const ProtocolViolation*>(&e))
        return 502;
    return 500;
}

std::string error_body(const std::exception& e) {
    std::string kind = "InternalError";
    if (auto* fe = dynamic_cast<const Error*>(&e)) kind = fe->kind();
    else if (dynamic_cast<const json::exception*>(&e)) kind = "BadRequest";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "BadRequest";
    return json{{"error", {{"kind", kind}, {"message", e.what()}}}, {"timestamp", now_iso()}}.dump();
}

namespace {

void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::uint8_t house_param(const httplib::Request& req) {
    const int addr = std::stoi(req.matches[1].str());
    if (addr < 1 || addr > protocol::kMaxAddress) throw OutOfRange("house address must lie in 1..247");
    return static_cast<std::uint8_t>(addr);
}

int int_param(const httplib::Request& req, const char* key, int fallback) {
    return req.has_param(key) ? std::stoi(req.get_param_value(key)) : fallback;
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body);
    if (!j.is_object()) throw ConfigDomain("request body must be a JSON object");
    return j;
}

} // namespace

struct ApiServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

ApiServer::ApiServer(Service& service, const protocol::Endpoint& endpoint) : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    const std::string base = "/api/v1";

    s.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            const int status = http_status_for(e);
            if (status >= 500) spdlog::error("{} {}: {}", req.method, req.path, e.what());
            res.status = status;
            res.set_content(error_body(e), "application/json");
        } catch (...) {
            res.status = 500;
            res.set_content(R"({"error":{"kind":"InternalError","message":"unknown"}})", "application/json");
        }
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(json{{"error", {{"kind", res.status == 404 ? "NotFound" : "HttpError"},
                                        {"message", httplib::status_message(res.status)}}},
                             {"timestamp", now_iso()}}
                            .dump(),
                        "application/json");
    });

    s.Get(base + "/houses", [&service](const httplib::Request& req, httplib::Response& res) {
        auto views = req.has_param("refresh") ? service.poll() : service.houses();
        json out = json::array();
        for (const auto& v : views) out.push_back(to_json(v));
        reply(res, {{"houses", out}, {"timestamp", now_iso()}});
    });

    s.Get(base + R"(/houses/(\d+)/telemetry)", [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<int> flock;
        if (req.has_param("flock")) flock = std::stoi(req.get_param_value("flock"));
        reply(res, service.telemetry(house_param(req), int_param(req, "from", 0), int_param(req, "to", kFlockDays), flock));
    });

    s.Post(base + R"(/houses/(\d+)/mortality)", [&service](const httplib::Request& req, httplib::Response& res) {
        auto b = body_of(req);
        auto out = service.record_mortality(house_param(req), b.at("day").get<int>(), b.at("count").get<std::int64_t>(),
                                            b.value("operator", std::string("unknown")));
        out["timestamp"] = now_iso();
        reply(res, out);
    });

    s.Get(base + "/plan/current", [&service](const httplib::Request&, httplib::Response& res) {
        auto p = service.current_plan();
        if (!p) throw NotFound("no plan has been approved");
        reply(res, *p);
    });

    s.Post(base + "/plan/optimize", [&service](const httplib::Request& req, httplib::Response& res) {
        auto id = service.start_optimize(body_of(req));
        reply(res, {{"job_id", id}, {"status", "running"}, {"timestamp", now_iso()}}, 202);
    });

    s.Get(base + R"(/jobs/([A-Za-z0-9_-]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        auto j = service.job(req.matches[1].str());
        if (!j) throw NotFound("no job " + req.matches[1].str());
        reply(res, *j);
    });

    s.Post(base + "/plan/approve", [&service](const httplib::Request& req, httplib::Response& res) {
        auto b = body_of(req);
        auto acks = to_json(service.approve(b.at("job_id").get<std::string>()));
        acks["timestamp"] = now_iso();
        reply(res, acks);
    });

    s.Get(base + "/alarms", [&service](const httplib::Request& req, httplib::Response& res) {
        const int limit = int_param(req, "limit", 200);
        if (limit < 1) throw OutOfRange("limit must be positive");
        reply(res, {{"alarms", service.alarms(limit)}, {"timestamp", now_iso()}});
    });

    s.Get(base + R"(/flocks/(\d+)/report)", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.flock_report(std::stoi(req.matches[1].str())));
    });

    s.Post(base + "/models/adaptive", [&service](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"job_id", service.start_adaptive()}, {"status", "running"}, {"timestamp", now_iso()}}, 202);
    });

    s.Get(base + "/health", [&service](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"status", "ok"}, {"model_version", service.model_version()}, {"timestamp", now_iso()}});
    });

    const std::string host = endpoint.host.empty() ? "127.0.0.1" : endpoint.host;
    if (endpoint.port == 0) {
        impl_->port = s.bind_to_any_port(host);
    } else if (s.bind_to_port(host, endpoint.port)) {
        impl_->port = endpoint.port;
    }
    if (impl_->port <= 0) throw TransportError("cannot bind the API to " + endpoint.str());
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    s.wait_until_ready();
    spdlog::info("API listening on {}:{}", host, impl_->port);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::port() const { return impl_->port; }

void ApiServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace flockplan::supervisor
