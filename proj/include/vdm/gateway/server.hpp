#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/gateway/config.hpp"
#include "vdm/orchestrator/session.hpp"

namespace vdm::gateway {

inline constexpr std::size_t kMaxFrameBytes = 8 * 1024 * 1024;
inline constexpr int kThumbnailLongSide = 96;

/// Buffer inspection document served by GET /api/session/{id}/state.
nlohmann::json describe_state(const PromptView& view, std::size_t token_estimate);

/// REST + WebSocket front end for orchestrator sessions.
///
///   POST /api/session                 -> 201 {"session_id"}
///   POST /api/session/{id}/message    -> 200 {"reply", "latency_ms"}
///   POST /api/session/{id}/frame      -> 200 {"frame_id"}
///   GET  /api/session/{id}/state      -> buffer inspection
///   GET  /api/session/{id}/metrics    -> session metrics
///   WS   /api/session/{id}/events     -> TranscriptEvent stream, backlog from seq 0
///
/// One thread per connection; handlers only enqueue events or read
/// published snapshots.
class Server {
public:
    explicit Server(GatewayConfig config, BackendFactory factory = make_backends);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts accepting. Port 0 picks a free port; see port().
    void start();
    void stop();
    int port() const { return bound_port_.load(); }

    std::shared_ptr<orchestrator::Session> find_session(const std::string& id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::atomic<int> bound_port_{0};
};

}  // namespace vdm::gateway
