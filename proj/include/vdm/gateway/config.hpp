#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/frames/resolution_policy.hpp"
#include "vdm/frames/source.hpp"
#include "vdm/llm/http_backend.hpp"
#include "vdm/orchestrator/conversation.hpp"

namespace vdm::gateway {

/// Invalid configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The configured backend cannot serve requests (e.g. API key variable unset).
class BackendUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Mock, Http };

BackendKind backend_kind_from_string(const std::string& name);
std::string_view to_string(BackendKind kind);

struct GatewayConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    BackendKind backend = BackendKind::Mock;
    llm::BackendConfig backend_config;
    /// Artificial delay for the mock backend's replies.
    int mock_delay_ms = 0;
    SummarisationPolicy policy;
    frames::FrameSourceConfig source;
    frames::ResolutionPolicyConfig resolution;
    /// File for single-session tools; directory of <session_id>.jsonl for the server.
    std::optional<std::filesystem::path> transcript;
    std::vector<std::string> cors_allow;

    /// Throws ConfigError naming the field.
    void validate() const;
    orchestrator::ConversationConfig conversation_config() const;
};

nlohmann::json to_json(const GatewayConfig& config);
/// Missing keys keep their defaults. Throws ConfigError.
GatewayConfig config_from_json(const nlohmann::json& json, GatewayConfig base = {});
GatewayConfig load_config(const std::filesystem::path& path, GatewayConfig base = {});

struct Backends {
    std::shared_ptr<llm::LlmBackend> reply;
    std::shared_ptr<llm::LlmBackend> summary;
};

using BackendFactory = std::function<Backends(const GatewayConfig&)>;

/// Mock: deterministic MockBackend pair. Http: one HttpBackend per model id.
/// Throws BackendUnavailable when the API key variable is unset.
Backends make_backends(const GatewayConfig& config);

}  // namespace vdm::gateway
