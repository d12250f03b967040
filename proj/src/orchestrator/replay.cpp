#include "vdm/orchestrator/replay.hpp"

#include <fstream>
#include <iterator>

#include <spdlog/spdlog.h>

namespace vdm::orchestrator {

namespace fs = std::filesystem;

SessionScript parse_script(const nlohmann::json& json, const fs::path& base_dir) {
    SessionScript script;
    const nlohmann::json* events = &json;
    if (json.is_object()) {
        if (json.contains("n")) script.n = json.at("n").get<int>();
        if (json.contains("m")) script.m = json.at("m").get<int>();
        if (json.contains("interval_ms")) script.interval_ms = json.at("interval_ms").get<int>();
        if (!json.contains("events")) throw std::invalid_argument("script object needs an 'events' array");
        events = &json.at("events");
    }
    if (!events->is_array()) throw std::invalid_argument("script events must be a JSON array");

    long long previous = 0;
    for (std::size_t i = 0; i < events->size(); ++i) {
        const auto& record = (*events)[i];
        const auto where = "script event " + std::to_string(i);
        if (!record.is_object() || !record.contains("at_ms") || !record.at("at_ms").is_number_integer()) {
            throw std::invalid_argument(where + ": missing integer at_ms");
        }
        const auto at = record.at("at_ms").get<long long>();
        if (at < previous) throw std::invalid_argument(where + ": at_ms decreases");
        previous = at;
        const bool has_say = record.contains("say");
        const bool has_frame = record.contains("frame");
        if (has_say == has_frame) throw std::invalid_argument(where + ": needs exactly one of say or frame");
        ScriptAction action;
        action.at = SessionTime(at);
        if (has_say) {
            action.action = Say{record.at("say").get<std::string>()};
        } else {
            fs::path path = record.at("frame").get<std::string>();
            action.action = PostFrame{path.is_absolute() ? path : base_dir / path};
        }
        script.actions.push_back(std::move(action));
    }
    return script;
}

SessionScript load_script(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read script " + path.string());
    auto json = nlohmann::json::parse(in, nullptr, false);
    if (json.is_discarded()) throw std::invalid_argument("script is not valid JSON: " + path.string());
    return parse_script(json, path.parent_path());
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ReplayResult replay(const SessionScript& script, ConversationConfig config,
                    std::shared_ptr<llm::LlmBackend> reply_backend,
                    std::shared_ptr<llm::LlmBackend> summary_backend,
                    const std::optional<fs::path>& transcript_path) {
    if (script.n || script.m) {
        config.policy = SummarisationPolicy(script.n.value_or(config.policy.n()),
                                            script.m.value_or(config.policy.m()));
    }
    ManualClock clock;
    Transcript transcript(transcript_path);
    Conversation conversation(std::move(config), std::move(reply_backend), std::move(summary_backend), clock,
                              transcript, [&clock] { return clock.now(); });

    ReplayResult result;
    for (const auto& step : script.actions) {
        clock.set(step.at);
        std::string label;
        if (const auto* say = std::get_if<Say>(&step.action)) {
            label = "say";
            try {
                conversation.handle_user_message(say->text);
            } catch (const llm::BackendError& e) {
                spdlog::warn("replay: reply failed: {}", e.what());
            } catch (const std::invalid_argument& e) {
                spdlog::warn("replay: skipped message: {}", e.what());
            }
        } else {
            const auto& frame = std::get<PostFrame>(step.action);
            try {
                const auto id = conversation.handle_frame(frames::encode_frame(read_bytes(frame.path)));
                label = "F" + std::to_string(id.value);
            } catch (const std::exception& e) {
                label = "frame error";
                conversation.record_error("frame", "frame_unreadable", frame.path.string() + ": " + e.what());
            }
        }
        result.steps.push_back({label, trace_string(conversation.buffer().elements())});
    }
    result.events = transcript.events();
    result.jsonl = transcript.to_jsonl();
    result.metrics = conversation.metrics();
    result.final_elements = conversation.buffer().elements();
    return result;
}

}  // namespace vdm::orchestrator
