#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdm/llm/request.hpp"

namespace vdm::llm {

enum class ErrorKind {
    Timeout,
    Upstream,           // 429 / 5xx after retries were exhausted
    Http,               // other non-2xx status
    MalformedResponse,
    Transport,          // connection refused, reset, DNS
    EmptySummary,
    Configuration,
};

std::string_view to_string(ErrorKind kind);

class BackendError : public std::runtime_error {
public:
    BackendError(ErrorKind kind, const std::string& message, int http_status = 0)
        : std::runtime_error(message), kind_(kind), http_status_(http_status) {}

    ErrorKind kind() const { return kind_; }
    int http_status() const { return http_status_; }

private:
    ErrorKind kind_;
    int http_status_;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct Completion {
    std::string text;
    std::optional<Usage> usage;
};

struct Reply {
    std::string text;
    std::optional<Usage> usage;
    std::int64_t latency_ms = 0;
};

/// A chat model that accepts interleaved text and images.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    /// Throws BackendError.
    virtual Completion complete(const ChatVisionRequest& request) = 0;
};

using LatencyClock = std::function<std::chrono::milliseconds()>;

/// Wall-clock latency source (steady clock).
LatencyClock steady_latency_clock();

/// Runs the request and measures request-to-response latency with `clock`.
Reply generate_reply(const ChatVisionRequest& request, LlmBackend& backend,
                     const LatencyClock& clock = steady_latency_clock());

/// Stable 64-bit digest of a request (FNV-1a over its canonical JSON).
std::uint64_t request_digest(const ChatVisionRequest& request);

/// Deterministic, scriptable backend that records every request verbatim.
///
/// Reply resolution order: injected fault, digest script, reply queue,
/// responder function. Thread-safe.
class MockBackend : public LlmBackend {
public:
    using Responder = std::function<std::string(const ChatVisionRequest&, std::size_t call_index)>;

    MockBackend();
    explicit MockBackend(Responder responder);

    Completion complete(const ChatVisionRequest& request) override;

    void script_digest(std::uint64_t digest, std::string reply);
    void queue_reply(std::string reply);
    /// The next `count` calls throw `error`.
    void fail_next(BackendError error, int count = 1);
    void set_delay(std::chrono::milliseconds delay);
    void set_responder(Responder responder);

    std::vector<ChatVisionRequest> requests() const;
    std::size_t call_count() const;

    /// "mock reply #k (saw N images)": deterministic default for conversations.
    static std::string default_reply(const ChatVisionRequest& request, std::size_t call_index);
    /// "summary #k of N frames": deterministic default for summaries.
    static std::string default_summary(const ChatVisionRequest& request, std::size_t call_index);

private:
    mutable std::mutex mutex_;
    Responder responder_;
    std::vector<std::pair<std::uint64_t, std::string>> digest_script_;
    std::deque<std::string> queue_;
    std::deque<BackendError> faults_;
    std::chrono::milliseconds delay_{0};
    std::vector<ChatVisionRequest> requests_;
};

}  // namespace vdm::llm
