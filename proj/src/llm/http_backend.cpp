#include "vdm/llm/http_backend.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace vdm::llm {

void BackendConfig::validate() const {
    parse_base_url(base_url);
    if (api_key_env.empty()) throw std::invalid_argument("backend.api_key_env must not be empty");
    if (model_id.empty()) throw std::invalid_argument("backend.model_id must not be empty");
    if (summary_model_id.empty()) throw std::invalid_argument("backend.summary_model_id must not be empty");
    if (timeout_ms <= 0) throw std::invalid_argument("backend.timeout_ms must be positive");
    if (max_retries < 0 || max_retries > 10) throw std::invalid_argument("backend.max_retries must be in [0, 10]");
    if (initial_backoff_ms < 0) throw std::invalid_argument("backend.initial_backoff_ms must be >= 0");
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
    j = {{"base_url", c.base_url},     {"api_key_env", c.api_key_env},
         {"model_id", c.model_id},     {"summary_model_id", c.summary_model_id},
         {"timeout_ms", c.timeout_ms}, {"max_retries", c.max_retries},
         {"initial_backoff_ms", c.initial_backoff_ms}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
    c.base_url = j.value("base_url", c.base_url);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.model_id = j.value("model_id", c.model_id);
    c.summary_model_id = j.value("summary_model_id", c.summary_model_id);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
}

ParsedUrl parse_base_url(const std::string& url) {
    static const std::regex pattern(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch match;
    if (!std::regex_match(url, match, pattern)) {
        throw std::invalid_argument("backend.base_url is not an http(s) URL: " + url);
    }
    ParsedUrl out;
    out.scheme = match[1];
    out.host = match[2];
    out.port = match[3].matched ? std::stoi(match[3]) : (out.scheme == "https" ? 443 : 80);
    out.path_prefix = match[4].matched ? std::string(match[4]) : "";
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

Completion parse_completion(const std::string& body) {
    auto json = nlohmann::json::parse(body, nullptr, false);
    if (json.is_discarded() || !json.is_object()) {
        throw BackendError(ErrorKind::MalformedResponse, "response body is not a JSON object");
    }
    if (!json.contains("choices") || !json["choices"].is_array()) {
        throw BackendError(ErrorKind::MalformedResponse, "response is missing field 'choices'");
    }
    if (json["choices"].empty()) {
        throw BackendError(ErrorKind::MalformedResponse, "response field 'choices' is empty");
    }
    const auto& choice = json["choices"][0];
    if (!choice.contains("message") || !choice["message"].is_object()) {
        throw BackendError(ErrorKind::MalformedResponse, "response is missing field 'choices[0].message'");
    }
    const auto& message = choice["message"];
    if (!message.contains("content")) {
        throw BackendError(ErrorKind::MalformedResponse,
                           "response is missing field 'choices[0].message.content'");
    }
    Completion out;
    const auto& content = message["content"];
    if (content.is_string()) {
        out.text = content.get<std::string>();
    } else if (content.is_array()) {
        for (const auto& part : content) {
            if (part.value("type", "") == "text") out.text += part.value("text", "");
        }
    } else {
        throw BackendError(ErrorKind::MalformedResponse,
                           "response field 'choices[0].message.content' is not text");
    }
    if (json.contains("usage") && json["usage"].is_object()) {
        const auto& usage = json["usage"];
        out.usage = Usage{usage.value("prompt_tokens", std::int64_t{0}),
                          usage.value("completion_tokens", std::int64_t{0})};
    }
    return out;
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    url_ = parse_base_url(config_.base_url);
}

Completion HttpBackend::complete(const ChatVisionRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    const std::string body = to_openai_json(request).dump();
    const std::string path = url_.path_prefix + "/chat/completions";

    httplib::Client client(url_.scheme + "://" + url_.host + ":" + std::to_string(url_.port));
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    int backoff_ms = config_.initial_backoff_ms;
    for (int attempt = 0;; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        auto result = client.Post(path, headers, body, "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - started;

        if (!result) {
            const auto error = result.error();
            const bool timed_out = error == httplib::Error::ConnectionTimeout ||
                                   ((error == httplib::Error::Read || error == httplib::Error::Write) &&
                                    elapsed >= timeout * 9 / 10);
            if (timed_out) {
                throw BackendError(ErrorKind::Timeout,
                                   "no response within " + std::to_string(config_.timeout_ms) + " ms");
            }
            throw BackendError(ErrorKind::Transport, "request failed: " + httplib::to_string(error));
        }

        const int status = result->status;
        if (status >= 200 && status < 300) return parse_completion(result->body);

        const bool retryable = status == 429 || status >= 500;
        if (!retryable) {
            throw BackendError(ErrorKind::Http, "backend returned HTTP " + std::to_string(status), status);
        }
        if (attempt >= config_.max_retries) {
            throw BackendError(ErrorKind::Upstream,
                               "backend returned HTTP " + std::to_string(status) + " after " +
                                   std::to_string(attempt) + " retries",
                               status);
        }
        spdlog::warn("backend returned HTTP {}; retrying in {} ms", status, backoff_ms);
        ++retries_;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
    }
}

}  // namespace vdm::llm
