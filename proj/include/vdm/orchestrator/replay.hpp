#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/orchestrator/conversation.hpp"

namespace vdm::orchestrator {

struct PostFrame {
    std::filesystem::path path;
};

struct Say {
    std::string text;
};

struct ScriptAction {
    SessionTime at{0};
    std::variant<PostFrame, Say> action;
};

/// Timed frame/dialogue events for deterministic replay.
///
/// File format, either a bare array of actions or an object with overrides:
///
///     {"n": 3, "m": 2, "interval_ms": 5000,
///      "events": [{"at_ms": 0, "frame": "frames/a.jpg"},
///                 {"at_ms": 6000, "say": "hello"}]}
///
/// Frame paths are resolved against the script's directory.
struct SessionScript {
    std::vector<ScriptAction> actions;
    std::optional<int> n;
    std::optional<int> m;
    std::optional<int> interval_ms;
};

/// Throws std::invalid_argument on a malformed script (missing at_ms,
/// decreasing at_ms, neither or both of say/frame).
SessionScript parse_script(const nlohmann::json& json, const std::filesystem::path& base_dir = {});
SessionScript load_script(const std::filesystem::path& path);

struct ReplayStep {
    std::string action;  // "F3", "say", "frame error"
    std::string buffer;  // trace_string of the buffer after the action
};

struct ReplayResult {
    std::vector<TranscriptEvent> events;
    std::vector<ReplayStep> steps;
    std::string jsonl;
    Metrics metrics;
    std::vector<ContextElement> final_elements;
};

/// Runs the script on logical time: no sleeping, latencies measured on the
/// script clock. With mock backends the JSONL output is byte-identical across
/// runs. Script n/m override config.policy.
ReplayResult replay(const SessionScript& script, ConversationConfig config,
                    std::shared_ptr<llm::LlmBackend> reply_backend,
                    std::shared_ptr<llm::LlmBackend> summary_backend,
                    const std::optional<std::filesystem::path>& transcript_path = std::nullopt);

}  // namespace vdm::orchestrator
