#include "vdm/orchestrator/conversation.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

namespace vdm::orchestrator {

SessionTime SteadySessionClock::now() {
    std::lock_guard lock(mutex_);
    const auto t = std::chrono::steady_clock::now();
    if (!origin_) origin_ = t;
    return std::chrono::duration_cast<SessionTime>(t - *origin_);
}

nlohmann::json to_json(const Metrics& m) {
    return {{"reply_count", m.reply_count},
            {"mean_latency_ms", m.mean_latency_ms},
            {"max_latency_ms", m.max_latency_ms},
            {"prompt_token_estimate", m.prompt_token_estimate},
            {"frames_received", m.frames_received},
            {"frames_summarised", m.frames_summarised}};
}

namespace {

nlohmann::json id_list(const std::vector<FrameId>& ids) {
    auto out = nlohmann::json::array();
    for (auto id : ids) out.push_back(id.value);
    return out;
}

}  // namespace

Conversation::Conversation(ConversationConfig config, std::shared_ptr<llm::LlmBackend> reply_backend,
                           std::shared_ptr<llm::LlmBackend> summary_backend, SessionClock& clock,
                           Transcript& transcript, llm::LatencyClock latency_clock)
    : config_(std::move(config)),
      reply_backend_(std::move(reply_backend)),
      summary_backend_(std::move(summary_backend)),
      clock_(clock),
      transcript_(transcript),
      latency_clock_(std::move(latency_clock)),
      buffer_(config_.system_instructions, config_.policy) {
    if (!reply_backend_ || !summary_backend_) throw std::invalid_argument("conversation needs two backends");
    config_.resolution.validate();
}

llm::Reply Conversation::handle_user_message(std::string_view text) {
    const auto pending = begin_user_message(text);
    std::variant<llm::Reply, llm::BackendError> outcome = llm::BackendError(llm::ErrorKind::Transport, "");
    try {
        outcome = llm::generate_reply(pending.request, *reply_backend_, latency_clock_);
    } catch (const llm::BackendError& e) {
        outcome = e;
    }
    return complete_user_message(pending, std::move(outcome));
}

Conversation::PendingReply Conversation::begin_user_message(std::string_view text) {
    if (reply_in_flight_) throw std::logic_error("a reply is already in flight");
    const auto now = clock_.now();
    buffer_.append_dialogue(DialogueLine{Speaker::User, std::string(text), now});
    transcript_.record(EventKind::UserMessage, now, {{"text", text}});
    PendingReply pending;
    pending.request = llm::render_prompt(buffer_.snapshot(), config_.render);
    pending.token_estimate = llm::estimate_tokens(pending.request);
    reply_in_flight_ = true;
    return pending;
}

llm::Reply Conversation::complete_user_message(const PendingReply& pending,
                                               std::variant<llm::Reply, llm::BackendError> outcome) {
    reply_in_flight_ = false;
    if (auto* reply = std::get_if<llm::Reply>(&outcome); reply != nullptr && trim(reply->text).empty()) {
        outcome = llm::BackendError(llm::ErrorKind::MalformedResponse, "backend returned an empty reply");
    }
    const auto now = clock_.now();
    std::optional<llm::BackendError> failure;
    llm::Reply result;
    if (auto* error = std::get_if<llm::BackendError>(&outcome)) {
        transcript_.record(EventKind::BackendError, now,
                           {{"stage", "reply"}, {"error", llm::to_string(error->kind())}, {"message", error->what()}});
        failure = *error;
    } else {
        result = std::get<llm::Reply>(std::move(outcome));
        buffer_.append_dialogue(DialogueLine{Speaker::Agent, result.text, now});
        ++reply_count_;
        latency_sum_ms_ += result.latency_ms;
        latency_max_ms_ = std::max(latency_max_ms_, result.latency_ms);
        transcript_.record(EventKind::AgentReply, now,
                           {{"text", result.text},
                            {"latency_ms", result.latency_ms},
                            {"token_estimate", pending.token_estimate}});
    }
    if (summary_deferred_) {
        summary_deferred_ = false;
        summarise_until_bounded();
    }
    if (failure) throw *failure;
    return result;
}

FrameId Conversation::handle_frame(frames::FrameImage image) {
    const FrameId id{next_frame_id_};
    handle_frame(frames::make_frame(std::move(image), id, clock_.now()));
    return id;
}

void Conversation::handle_frame(Frame frame) {
    const auto id = frame.frame_id;
    const auto trigger = buffer_.append_frame(std::move(frame));
    next_frame_id_ = id.value + 1;
    ++frames_received_;
    frames::apply_resolution_policy(buffer_, config_.resolution);

    const auto& arrived = std::get<Frame>(*std::find_if(
        buffer_.elements().rbegin(), buffer_.elements().rend(), is_frame));
    spool(arrived);
    transcript_.record(EventKind::FrameArrived, clock_.now(),
                       {{"frame_id", id.value}, {"width", arrived.width}, {"height", arrived.height}});

    if (!trigger) return;
    if (reply_in_flight_) {
        summary_deferred_ = true;
        return;
    }
    summarise_until_bounded();
}

void Conversation::summarise_until_bounded() {
    // One pass normally suffices; more are needed only after earlier
    // summarisation failures let frames pile up.
    while (buffer_.frame_count() >= static_cast<std::size_t>(buffer_.policy().n())) {
        const auto run = buffer_.select_run();
        try {
            const auto summary = summarizer::run_summarisation(buffer_, run, *summary_backend_,
                                                               config_.summarizer, clock_.now());
            frames_summarised_ += run.frames.size();
            transcript_.record(EventKind::SummaryCreated, summary.created_at,
                               {{"covers_frame_ids", id_list(summary.covers_frame_ids)}, {"text", summary.text}});
        } catch (const llm::BackendError& e) {
            spdlog::warn("summarisation failed ({}); will retry on the next frame", e.what());
            transcript_.record(EventKind::BackendError, clock_.now(),
                               {{"stage", "summary"}, {"error", llm::to_string(e.kind())}, {"message", e.what()}});
            return;
        }
    }
}

void Conversation::record_error(std::string_view stage, std::string_view error, std::string_view message) {
    transcript_.record(EventKind::BackendError, clock_.now(),
                       {{"stage", stage}, {"error", error}, {"message", message}});
}

void Conversation::spool(const Frame& frame) const {
    if (!config_.frame_spool_dir) return;
    std::filesystem::create_directories(*config_.frame_spool_dir);
    const auto path = *config_.frame_spool_dir / ("frame_" + std::to_string(frame.frame_id.value) + ".jpg");
    std::ofstream out(path, std::ios::binary);
    const auto& bytes = frame.image.data();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) spdlog::warn("could not spool frame {} to {}", frame.frame_id.value, path.string());
}

Metrics Conversation::metrics() const {
    Metrics m;
    m.reply_count = reply_count_;
    m.mean_latency_ms = reply_count_ == 0 ? 0.0 : static_cast<double>(latency_sum_ms_) / reply_count_;
    m.max_latency_ms = latency_max_ms_;
    m.prompt_token_estimate = llm::estimate_tokens(llm::render_prompt(buffer_.snapshot(), config_.render));
    m.frames_received = frames_received_;
    m.frames_summarised = frames_summarised_;
    return m;
}

}  // namespace vdm::orchestrator
