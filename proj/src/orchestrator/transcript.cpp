#include "vdm/orchestrator/transcript.hpp"

#include <stdexcept>

namespace vdm::orchestrator {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::FrameArrived:
            return "frame_arrived";
        case EventKind::UserMessage:
            return "user_message";
        case EventKind::AgentReply:
            return "agent_reply";
        case EventKind::SummaryCreated:
            return "summary_created";
        case EventKind::BackendError:
            return "backend_error";
    }
    return "unknown";
}

EventKind event_kind_from_string(std::string_view name) {
    for (auto kind : {EventKind::FrameArrived, EventKind::UserMessage, EventKind::AgentReply,
                      EventKind::SummaryCreated, EventKind::BackendError}) {
        if (to_string(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown transcript event kind: " + std::string(name));
}

void to_json(nlohmann::json& j, const TranscriptEvent& e) {
    j = {{"seq", e.seq}, {"at_ms", e.at.count()}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

void from_json(const nlohmann::json& j, TranscriptEvent& e) {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.at = SessionTime(j.at("at_ms").get<long long>());
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
}

Transcript::Transcript(const std::filesystem::path& jsonl_path)
    : Transcript(std::optional<std::filesystem::path>(jsonl_path)) {}

Transcript::Transcript(const std::optional<std::filesystem::path>& jsonl_path) {
    if (jsonl_path) {
        if (jsonl_path->has_parent_path()) std::filesystem::create_directories(jsonl_path->parent_path());
        file_.emplace(*jsonl_path, std::ios::out | std::ios::trunc | std::ios::binary);
        if (!*file_) throw std::runtime_error("cannot open transcript file " + jsonl_path->string());
        *file_ << header_line() << '\n';
        file_->flush();
    }
}

std::string Transcript::header_line() {
    return nlohmann::json{{"schema", kTranscriptSchema}, {"version", kTranscriptVersion}}.dump();
}

TranscriptEvent Transcript::record(EventKind kind, SessionTime at, nlohmann::json payload) {
    std::lock_guard lock(mutex_);
    TranscriptEvent event{events_.size(), at, kind, std::move(payload)};
    events_.push_back(event);
    if (file_) {
        *file_ << nlohmann::json(event).dump() << '\n';
        file_->flush();
    }
    for (const auto& [id, subscriber] : subscribers_) subscriber(event);
    return event;
}

std::vector<TranscriptEvent> Transcript::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

Transcript::SubscriptionId Transcript::subscribe(Subscriber subscriber) {
    std::lock_guard lock(mutex_);
    for (const auto& e : events_) subscriber(e);
    const auto id = next_subscription_++;
    subscribers_.emplace_back(id, std::move(subscriber));
    return id;
}

void Transcript::unsubscribe(SubscriptionId id) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [id](const auto& entry) { return entry.first == id; });
}

std::string Transcript::to_jsonl() const {
    std::lock_guard lock(mutex_);
    std::string out = header_line() + "\n";
    for (const auto& e : events_) out += nlohmann::json(e).dump() + "\n";
    return out;
}

std::vector<TranscriptEvent> read_transcript(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read transcript " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("transcript is empty: " + path.string());
    const auto header = nlohmann::json::parse(line);
    if (header.value("schema", "") != kTranscriptSchema) {
        throw std::runtime_error("not a transcript file: " + path.string());
    }
    std::vector<TranscriptEvent> events;
    while (std::getline(in, line)) {
        if (!line.empty()) events.push_back(nlohmann::json::parse(line).get<TranscriptEvent>());
    }
    return events;
}

}  // namespace vdm::orchestrator
