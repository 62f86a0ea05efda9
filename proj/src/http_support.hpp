#pragma once

#include <condition_variable>
#include <mutex>
#include <string>

namespace grg::detail {

struct HttpRequest {
    std::string endpoint; // scheme://host[:port][/prefix]
    std::string path;     // appended to the endpoint's path prefix
    std::string body;     // JSON payload
    int timeout_ms = 30000;
    int retry_base_ms = 100;
    int max_attempts = 5;
};

// POSTs JSON and returns the response body. Transport failures and
// 408/429/5xx statuses are retried with exponential backoff up to
// max_attempts; exhaustion raises TransportError carrying the attempt
// count. Other non-200 statuses fail immediately.
std::string post_json(const HttpRequest& req);

// Bounds the number of concurrent in-flight requests per client.
class Gate {
public:
    explicit Gate(int slots) : free_(slots) {}

    void acquire() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [this] { return free_ > 0; });
        --free_;
    }

    void release() {
        {
            std::lock_guard lock(m_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    int free_;
};

class GatePass {
public:
    explicit GatePass(Gate& gate) : gate_(gate) { gate_.acquire(); }
    ~GatePass() { gate_.release(); }
    GatePass(const GatePass&) = delete;
    GatePass& operator=(const GatePass&) = delete;

private:
    Gate& gate_;
};

} // namespace grg::detail
