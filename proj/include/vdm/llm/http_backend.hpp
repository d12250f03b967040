#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "vdm/llm/backend.hpp"

namespace vdm::llm {

struct BackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    /// Name of the environment variable holding the API key. The key itself is
    /// read at call time and never stored, logged or serialized.
    std::string api_key_env = "OPENAI_API_KEY";
    std::string model_id = "gpt-4o";
    std::string summary_model_id = "gpt-4o";
    int timeout_ms = 30000;
    int max_retries = 2;
    /// First retry delay; doubles on each further retry.
    int initial_backoff_ms = 500;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

struct ParsedUrl {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path_prefix;
};

/// Throws std::invalid_argument on anything that is not http(s)://host[:port][/path].
ParsedUrl parse_base_url(const std::string& url);

/// Extracts the first choice's text; throws BackendError(MalformedResponse)
/// naming the missing field.
Completion parse_completion(const std::string& body);

/// OpenAI-compatible {base_url}/chat/completions client.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(BackendConfig config);

    Completion complete(const ChatVisionRequest& request) override;

    const BackendConfig& config() const { return config_; }
    /// Retries performed across all calls (429/5xx responses that were retried).
    int retry_count() const { return retries_.load(); }

private:
    BackendConfig config_;
    ParsedUrl url_;
    std::atomic<int> retries_{0};
};

}  // namespace vdm::llm
