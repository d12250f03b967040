#include "vdm/gateway/config.hpp"

#include <cstdlib>
#include <fstream>

namespace vdm::gateway {

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "mock") return BackendKind::Mock;
    if (name == "http") return BackendKind::Http;
    throw ConfigError("backend.kind must be 'mock' or 'http' (got '" + name + "')");
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::Mock ? "mock" : "http"; }

void GatewayConfig::validate() const {
    if (host.empty()) throw ConfigError("listen.host must not be empty");
    if (port < 0 || port > 65535) throw ConfigError("listen.port must be in [0, 65535]");
    if (mock_delay_ms < 0) throw ConfigError("backend.mock_delay_ms must be >= 0");
    try {
        backend_config.validate();
        source.validate();
        resolution.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

orchestrator::ConversationConfig GatewayConfig::conversation_config() const {
    orchestrator::ConversationConfig c;
    c.policy = policy;
    c.resolution = resolution;
    c.render.model_id = backend_config.model_id;
    c.summarizer.model_id = backend_config.summary_model_id;
    return c;
}

nlohmann::json to_json(const GatewayConfig& config) {
    nlohmann::json backend = config.backend_config;
    backend["kind"] = to_string(config.backend);
    backend["mock_delay_ms"] = config.mock_delay_ms;
    nlohmann::json j = {{"listen", {{"host", config.host}, {"port", config.port}}},
                        {"backend", backend},
                        {"policy", {{"n", config.policy.n()}, {"m", config.policy.m()}}},
                        {"source", config.source},
                        {"resolution", config.resolution},
                        {"cors_allow", config.cors_allow}};
    if (config.transcript) j["transcript"] = config.transcript->string();
    return j;
}

GatewayConfig config_from_json(const nlohmann::json& json, GatewayConfig c) {
    if (!json.is_object()) throw ConfigError("config must be a JSON object");
    try {
        if (json.contains("listen")) {
            const auto& l = json.at("listen");
            c.host = l.value("host", c.host);
            c.port = l.value("port", c.port);
        }
        if (json.contains("backend")) {
            const auto& b = json.at("backend");
            if (b.contains("kind")) c.backend = backend_kind_from_string(b.at("kind").get<std::string>());
            c.mock_delay_ms = b.value("mock_delay_ms", c.mock_delay_ms);
            from_json(b, c.backend_config);
        }
        if (json.contains("policy")) {
            const auto& p = json.at("policy");
            try {
                c.policy = SummarisationPolicy(p.value("n", c.policy.n()), p.value("m", c.policy.m()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("policy: ") + e.what());
            }
        }
        if (json.contains("source")) from_json(json.at("source"), c.source);
        if (json.contains("resolution")) from_json(json.at("resolution"), c.resolution);
        if (json.contains("transcript")) c.transcript = json.at("transcript").get<std::string>();
        if (json.contains("cors_allow")) c.cors_allow = json.at("cors_allow").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

GatewayConfig load_config(const std::filesystem::path& path, GatewayConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    auto json = nlohmann::json::parse(in, nullptr, false);
    if (json.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    return config_from_json(json, std::move(base));
}

Backends make_backends(const GatewayConfig& config) {
    if (config.backend == BackendKind::Mock) {
        auto reply = std::make_shared<llm::MockBackend>(&llm::MockBackend::default_reply);
        auto summary = std::make_shared<llm::MockBackend>(&llm::MockBackend::default_summary);
        reply->set_delay(std::chrono::milliseconds(config.mock_delay_ms));
        return {reply, summary};
    }
    const char* key = std::getenv(config.backend_config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw BackendUnavailable("environment variable " + config.backend_config.api_key_env + " is not set");
    }
    auto summary_config = config.backend_config;
    summary_config.model_id = config.backend_config.summary_model_id;
    return {std::make_shared<llm::HttpBackend>(config.backend_config),
            std::make_shared<llm::HttpBackend>(summary_config)};
}

}  // namespace vdm::gateway
