#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/context/elements.hpp"

namespace vdm::orchestrator {

enum class EventKind { FrameArrived, UserMessage, AgentReply, SummaryCreated, BackendError };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

struct TranscriptEvent {
    std::uint64_t seq = 0;
    SessionTime at{0};
    EventKind kind = EventKind::UserMessage;
    nlohmann::json payload;

    friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

void to_json(nlohmann::json& j, const TranscriptEvent& e);
void from_json(const nlohmann::json& j, TranscriptEvent& e);

inline constexpr std::string_view kTranscriptSchema = "vdm.transcript";
inline constexpr int kTranscriptVersion = 1;

/// Append-only, sequence-numbered event log. Optionally mirrored to a JSON
/// Lines file (one header line, then one event per line) and fanned out to
/// live subscribers. Thread-safe.
class Transcript {
public:
    using Subscriber = std::function<void(const TranscriptEvent&)>;
    using SubscriptionId = std::uint64_t;

    Transcript() = default;
    /// Creates/truncates the file and writes the header line.
    explicit Transcript(const std::filesystem::path& jsonl_path);
    explicit Transcript(const std::optional<std::filesystem::path>& jsonl_path);

    TranscriptEvent record(EventKind kind, SessionTime at, nlohmann::json payload);

    std::vector<TranscriptEvent> events() const;
    std::size_t size() const;

    /// Replays the backlog from seq 0 to the subscriber, then keeps it
    /// subscribed to new events, with no gap or duplicate in between.
    /// Subscribers run under the transcript lock and must not call back in.
    SubscriptionId subscribe(Subscriber subscriber);
    void unsubscribe(SubscriptionId id);

    static std::string header_line();
    /// Header plus every event, exactly what the JSONL file contains.
    std::string to_jsonl() const;

private:
    mutable std::mutex mutex_;
    std::vector<TranscriptEvent> events_;
    std::optional<std::ofstream> file_;
    std::vector<std::pair<SubscriptionId, Subscriber>> subscribers_;
    SubscriptionId next_subscription_ = 1;
};

/// Reads a JSONL transcript back (header checked).
std::vector<TranscriptEvent> read_transcript(const std::filesystem::path& path);

}  // namespace vdm::orchestrator
