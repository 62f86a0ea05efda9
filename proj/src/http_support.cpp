#include "http_support.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"

#include "grg/error.hpp"

namespace grg::detail {

namespace {

struct EndpointParts {
    std::string base;   // scheme://host[:port]
    std::string prefix; // path prefix without trailing slash
};

EndpointParts split_endpoint(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw Error("endpoint must include a scheme: " + endpoint);
    const auto slash = endpoint.find('/', scheme + 3);
    EndpointParts parts;
    if (slash == std::string::npos) {
        parts.base = endpoint;
    } else {
        parts.base = endpoint.substr(0, slash);
        parts.prefix = endpoint.substr(slash);
        while (!parts.prefix.empty() && parts.prefix.back() == '/') parts.prefix.pop_back();
    }
    return parts;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status <= 599);
}

} // namespace

std::string post_json(const HttpRequest& req) {
    const EndpointParts parts = split_endpoint(req.endpoint);
    const std::string path = parts.prefix + req.path;
    std::string last_error;

    for (int attempt = 1; attempt <= req.max_attempts; ++attempt) {
        httplib::Client client(parts.base);
        client.set_connection_timeout(0, req.timeout_ms * 1000);
        client.set_read_timeout(0, req.timeout_ms * 1000);
        client.set_write_timeout(0, req.timeout_ms * 1000);

        auto res = client.Post(path, req.body, "application/json");
        if (res) {
            if (res->status == 200) return res->body;
            if (!retryable_status(res->status)) {
                throw Error("endpoint " + parts.base + path + " returned status " +
                            std::to_string(res->status));
            }
            last_error = "status " + std::to_string(res->status);
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < req.max_attempts && req.retry_base_ms > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(req.retry_base_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
    throw TransportError("endpoint " + parts.base + path + " failed after " +
                             std::to_string(req.max_attempts) + " attempts: " + last_error,
                         req.max_attempts);
}

} // namespace grg::detail
