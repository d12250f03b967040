#include "vdm/llm/backend.hpp"

#include <thread>

namespace vdm::llm {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Timeout:
            return "timeout";
        case ErrorKind::Upstream:
            return "upstream";
        case ErrorKind::Http:
            return "http";
        case ErrorKind::MalformedResponse:
            return "malformed_response";
        case ErrorKind::Transport:
            return "transport";
        case ErrorKind::EmptySummary:
            return "empty_summary";
        case ErrorKind::Configuration:
            return "configuration";
    }
    return "unknown";
}

LatencyClock steady_latency_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now().time_since_epoch());
    };
}

Reply generate_reply(const ChatVisionRequest& request, LlmBackend& backend, const LatencyClock& clock) {
    const auto start = clock();
    auto completion = backend.complete(request);
    const auto end = clock();
    return Reply{std::move(completion.text), completion.usage, (end - start).count()};
}

std::uint64_t request_digest(const ChatVisionRequest& request) {
    const std::string canonical = to_openai_json(request).dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

MockBackend::MockBackend() : MockBackend(&MockBackend::default_reply) {}

MockBackend::MockBackend(Responder responder) : responder_(std::move(responder)) {}

Completion MockBackend::complete(const ChatVisionRequest& request) {
    std::chrono::milliseconds delay;
    std::size_t index;
    std::optional<BackendError> fault;
    std::optional<std::string> reply;
    Responder responder;
    {
        std::lock_guard lock(mutex_);
        index = requests_.size();
        requests_.push_back(request);
        delay = delay_;
        if (!faults_.empty()) {
            fault = faults_.front();
            faults_.pop_front();
        } else {
            const auto digest = request_digest(request);
            for (const auto& [d, text] : digest_script_) {
                if (d == digest) {
                    reply = text;
                    break;
                }
            }
            if (!reply && !queue_.empty()) {
                reply = std::move(queue_.front());
                queue_.pop_front();
            }
            responder = responder_;
        }
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    if (fault) throw *fault;
    if (!reply) reply = responder(request, index);
    return Completion{std::move(*reply), Usage{static_cast<std::int64_t>(estimate_tokens(request)), 0}};
}

void MockBackend::script_digest(std::uint64_t digest, std::string reply) {
    std::lock_guard lock(mutex_);
    digest_script_.emplace_back(digest, std::move(reply));
}

void MockBackend::queue_reply(std::string reply) {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(reply));
}

void MockBackend::fail_next(BackendError error, int count) {
    std::lock_guard lock(mutex_);
    for (int i = 0; i < count; ++i) faults_.push_back(error);
}

void MockBackend::set_delay(std::chrono::milliseconds delay) {
    std::lock_guard lock(mutex_);
    delay_ = delay;
}

void MockBackend::set_responder(Responder responder) {
    std::lock_guard lock(mutex_);
    responder_ = std::move(responder);
}

std::vector<ChatVisionRequest> MockBackend::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::size_t MockBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
}

std::string MockBackend::default_reply(const ChatVisionRequest& request, std::size_t call_index) {
    return "mock reply #" + std::to_string(call_index + 1) + " (saw " +
           std::to_string(request.image_part_count()) + " images)";
}

std::string MockBackend::default_summary(const ChatVisionRequest& request, std::size_t call_index) {
    return "summary #" + std::to_string(call_index + 1) + " of " +
           std::to_string(request.image_part_count()) + " frames";
}

}  // namespace vdm::llm
