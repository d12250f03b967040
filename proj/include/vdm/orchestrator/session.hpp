#pragma once

#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "vdm/orchestrator/conversation.hpp"

namespace vdm::orchestrator {

class QueueFullError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SessionClosedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SessionOptions {
    /// User messages allowed to wait behind the one in flight.
    std::size_t message_queue_depth = 4;
    std::optional<std::filesystem::path> transcript_path;
};

/// One live conversation. Producers on any thread submit events; a single
/// executor thread owns the Conversation and applies them in submission
/// order. At most one reply call is in flight; further messages queue behind
/// it while frames keep being appended.
class Session {
public:
    Session(std::string id, ConversationConfig config, std::shared_ptr<llm::LlmBackend> reply_backend,
            std::shared_ptr<llm::LlmBackend> summary_backend, SessionOptions options = {});
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }

    /// Throws std::invalid_argument for blank text and QueueFullError when
    /// the in-flight call plus queue are at capacity. The future yields the
    /// reply or rethrows llm::BackendError.
    std::future<llm::Reply> submit_message(std::string text);

    /// Assigns the frame id immediately (arrival order) and queues the frame.
    FrameId submit_frame(frames::FrameImage image);

    /// Ready once every event submitted before it has been applied and no
    /// reply is in flight or queued.
    std::future<void> flush();

    /// Latest state published by the executor; safe from any thread.
    PromptView snapshot() const;
    Metrics metrics() const;
    const ConversationConfig& config() const { return config_; }
    Transcript& transcript() { return transcript_; }

private:
    struct UserMessage {
        std::string text;
        std::shared_ptr<std::promise<llm::Reply>> promise;
    };
    struct FrameArrival {
        Frame frame;
    };
    struct ReplyDone {
        std::variant<llm::Reply, llm::BackendError> outcome;
    };
    struct Flush {
        std::shared_ptr<std::promise<void>> promise;
    };
    using Event = std::variant<UserMessage, FrameArrival, ReplyDone, Flush>;

    void post(Event event);
    void run();
    void apply(UserMessage& e);
    void apply(FrameArrival& e);
    void apply(ReplyDone& e);
    void apply(Flush& e);
    void start_reply(UserMessage message);
    void publish();
    bool idle() const;

    std::string id_;
    ConversationConfig config_;
    std::shared_ptr<llm::LlmBackend> reply_backend_;
    SessionOptions options_;
    SteadySessionClock clock_;
    Transcript transcript_;
    Conversation conversation_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<Event> queue_;
    bool stopping_ = false;
    std::uint64_t next_frame_id_ = 1;
    std::size_t outstanding_messages_ = 0;

    // Executor-thread state.
    std::deque<UserMessage> waiting_messages_;
    std::optional<UserMessage> in_flight_;
    std::optional<Conversation::PendingReply> pending_;
    std::vector<std::shared_ptr<std::promise<void>>> flushes_;
    std::thread reply_worker_;

    mutable std::mutex published_mutex_;
    PromptView published_view_;
    Metrics published_metrics_;

    std::thread executor_;
};

}  // namespace vdm::orchestrator
