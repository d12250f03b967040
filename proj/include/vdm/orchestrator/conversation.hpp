#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "vdm/context/context_buffer.hpp"
#include "vdm/frames/codec.hpp"
#include "vdm/frames/resolution_policy.hpp"
#include "vdm/llm/backend.hpp"
#include "vdm/llm/request.hpp"
#include "vdm/orchestrator/transcript.hpp"
#include "vdm/summarizer/summarizer.hpp"

namespace vdm::orchestrator {

/// Milliseconds since session start.
class SessionClock {
public:
    virtual ~SessionClock() = default;
    virtual SessionTime now() = 0;
};

/// Live clock; zero is the first call to now().
class SteadySessionClock : public SessionClock {
public:
    SessionTime now() override;

private:
    std::mutex mutex_;
    std::optional<std::chrono::steady_clock::time_point> origin_;
};

/// Logical clock driven by replay scripts.
class ManualClock : public SessionClock {
public:
    SessionTime now() override { return now_; }
    void set(SessionTime t) { now_ = t; }

private:
    SessionTime now_{0};
};

struct ConversationConfig {
    SummarisationPolicy policy;
    std::string system_instructions{llm::kDefaultSystemInstructions};
    llm::RenderOptions render;
    summarizer::SummarizerConfig summarizer;
    frames::ResolutionPolicyConfig resolution;
    /// When set, every arriving frame's JPEG is written here as frame_<id>.jpg.
    std::optional<std::filesystem::path> frame_spool_dir;
};

struct Metrics {
    std::uint64_t reply_count = 0;
    double mean_latency_ms = 0;
    std::int64_t max_latency_ms = 0;
    std::size_t prompt_token_estimate = 0;
    std::uint64_t frames_received = 0;
    std::uint64_t frames_summarised = 0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

nlohmann::json to_json(const Metrics& m);

/// The conversation manager proper: a single-threaded state machine over the
/// context buffer that records every step in the transcript. Session wraps it
/// with an executor thread; replay drives it directly.
///
/// A reply is split into begin/complete so frames can keep arriving while the
/// model is busy. Summarisation that triggers during that window is deferred
/// until the reply completes.
class Conversation {
public:
    Conversation(ConversationConfig config, std::shared_ptr<llm::LlmBackend> reply_backend,
                 std::shared_ptr<llm::LlmBackend> summary_backend, SessionClock& clock,
                 Transcript& transcript, llm::LatencyClock latency_clock = llm::steady_latency_clock());

    /// Blocking round trip. Throws std::invalid_argument on blank text (no
    /// events) and llm::BackendError after recording it; the user line stays.
    llm::Reply handle_user_message(std::string_view text);

    struct PendingReply {
        llm::ChatVisionRequest request;
        std::size_t token_estimate = 0;
    };
    /// Appends the user line, records UserMessage, renders the prompt from a
    /// snapshot. Only one reply may be pending.
    PendingReply begin_user_message(std::string_view text);
    /// Appends the agent line (or records BackendError), then runs any
    /// deferred summarisation. Returns the reply or rethrows the error.
    llm::Reply complete_user_message(const PendingReply& pending,
                                     std::variant<llm::Reply, llm::BackendError> outcome);
    bool reply_in_flight() const { return reply_in_flight_; }

    /// Stamps the image with the next frame id and the current session time.
    FrameId handle_frame(frames::FrameImage image);
    /// Frame with a caller-assigned id. Throws std::invalid_argument (no events)
    /// when the id does not increase.
    void handle_frame(Frame frame);

    /// Records a BackendError-kind event for failures outside the model call
    /// (unreadable frame files during replay, for example).
    void record_error(std::string_view stage, std::string_view error, std::string_view message);

    Metrics metrics() const;
    PromptView snapshot() const { return buffer_.snapshot(); }
    const ContextBuffer& buffer() const { return buffer_; }
    const ConversationConfig& config() const { return config_; }
    SessionClock& clock() { return clock_; }

private:
    void summarise_until_bounded();
    void spool(const Frame& frame) const;

    ConversationConfig config_;
    std::shared_ptr<llm::LlmBackend> reply_backend_;
    std::shared_ptr<llm::LlmBackend> summary_backend_;
    SessionClock& clock_;
    Transcript& transcript_;
    llm::LatencyClock latency_clock_;
    ContextBuffer buffer_;

    std::uint64_t next_frame_id_ = 1;
    bool reply_in_flight_ = false;
    bool summary_deferred_ = false;

    std::uint64_t reply_count_ = 0;
    std::int64_t latency_sum_ms_ = 0;
    std::int64_t latency_max_ms_ = 0;
    std::uint64_t frames_received_ = 0;
    std::uint64_t frames_summarised_ = 0;
};

}  // namespace vdm::orchestrator
