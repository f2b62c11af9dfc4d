#pragma once

#include <memory>
#include <string>

#include "flockplan/protocol/transport.hpp"

namespace flockplan::supervisor {

class Service;

/// Maps an exception to the HTTP status the API answers with.
int http_status_for(const std::exception& e);
/// {"error": {"kind", "message"}, "timestamp"}
std::string error_body(const std::exception& e);

/// REST front of a Service under /api/v1. Serves on its own thread until
/// stop() or destruction.
class ApiServer {
public:
    ApiServer(Service& service, const protocol::Endpoint& endpoint);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    int port() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace flockplan::supervisor
