#include "vdm/orchestrator/session.hpp"

#include <spdlog/spdlog.h>

namespace vdm::orchestrator {

Session::Session(std::string id, ConversationConfig config, std::shared_ptr<llm::LlmBackend> reply_backend,
                 std::shared_ptr<llm::LlmBackend> summary_backend, SessionOptions options)
    : id_(std::move(id)),
      config_(config),
      reply_backend_(reply_backend),
      options_(std::move(options)),
      transcript_(options_.transcript_path),
      conversation_(std::move(config), std::move(reply_backend), std::move(summary_backend), clock_,
                    transcript_) {
    publish();
    executor_ = std::thread([this] { run(); });
}

Session::~Session() {
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (executor_.joinable()) executor_.join();
    if (reply_worker_.joinable()) reply_worker_.join();

    const auto closed = std::make_exception_ptr(SessionClosedError("session closed"));
    if (in_flight_) in_flight_->promise->set_exception(closed);
    for (auto& m : waiting_messages_) m.promise->set_exception(closed);
    for (auto& f : flushes_) f->set_exception(closed);
    for (auto& event : queue_) {
        if (auto* m = std::get_if<UserMessage>(&event)) m->promise->set_exception(closed);
        if (auto* f = std::get_if<Flush>(&event)) f->promise->set_exception(closed);
    }
}

std::future<llm::Reply> Session::submit_message(std::string text) {
    if (trim(text).empty()) throw std::invalid_argument("message text must not be empty");
    auto promise = std::make_shared<std::promise<llm::Reply>>();
    auto future = promise->get_future();
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) throw SessionClosedError("session closed");
        if (outstanding_messages_ >= 1 + options_.message_queue_depth) {
            throw QueueFullError("a reply is in flight and the message queue is full");
        }
        ++outstanding_messages_;
        queue_.emplace_back(UserMessage{std::move(text), std::move(promise)});
    }
    queue_cv_.notify_one();
    return future;
}

FrameId Session::submit_frame(frames::FrameImage image) {
    FrameId id;
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) throw SessionClosedError("session closed");
        id = FrameId{next_frame_id_++};
        // captured_at is stamped by the executor when the frame is applied.
        queue_.emplace_back(FrameArrival{frames::make_frame(std::move(image), id, SessionTime(0))});
    }
    queue_cv_.notify_one();
    return id;
}

std::future<void> Session::flush() {
    auto promise = std::make_shared<std::promise<void>>();
    auto future = promise->get_future();
    post(Flush{std::move(promise)});
    return future;
}

PromptView Session::snapshot() const {
    std::lock_guard lock(published_mutex_);
    return published_view_;
}

Metrics Session::metrics() const {
    std::lock_guard lock(published_mutex_);
    return published_metrics_;
}

void Session::post(Event event) {
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) throw SessionClosedError("session closed");
        queue_.push_back(std::move(event));
    }
    queue_cv_.notify_one();
}

void Session::run() {
    while (true) {
        Event event;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            event = std::move(queue_.front());
            queue_.pop_front();
        }
        std::visit([this](auto& e) { apply(e); }, event);
        publish();
        if (idle()) {
            for (auto& f : flushes_) f->set_value();
            flushes_.clear();
        }
    }
}

bool Session::idle() const { return !in_flight_ && waiting_messages_.empty(); }

void Session::apply(UserMessage& e) {
    if (in_flight_) {
        waiting_messages_.push_back(std::move(e));
        return;
    }
    start_reply(std::move(e));
}

void Session::start_reply(UserMessage message) {
    try {
        pending_ = conversation_.begin_user_message(message.text);
    } catch (...) {
        message.promise->set_exception(std::current_exception());
        std::lock_guard lock(queue_mutex_);
        --outstanding_messages_;
        return;
    }
    in_flight_ = std::move(message);
    if (reply_worker_.joinable()) reply_worker_.join();
    reply_worker_ = std::thread([this, request = pending_->request] {
        std::variant<llm::Reply, llm::BackendError> outcome = llm::BackendError(llm::ErrorKind::Transport, "");
        try {
            outcome = llm::generate_reply(request, *reply_backend_);
        } catch (const llm::BackendError& e) {
            outcome = e;
        } catch (const std::exception& e) {
            outcome = llm::BackendError(llm::ErrorKind::Transport, e.what());
        }
        try {
            post(ReplyDone{std::move(outcome)});
        } catch (const SessionClosedError&) {
        }
    });
}

void Session::apply(FrameArrival& e) {
    e.frame.captured_at = clock_.now();
    try {
        conversation_.handle_frame(std::move(e.frame));
    } catch (const std::invalid_argument& ex) {
        spdlog::warn("session {}: rejected frame: {}", id_, ex.what());
    }
}

void Session::apply(ReplyDone& e) {
    auto message = std::move(*in_flight_);
    in_flight_.reset();
    try {
        message.promise->set_value(conversation_.complete_user_message(*pending_, std::move(e.outcome)));
    } catch (...) {
        message.promise->set_exception(std::current_exception());
    }
    pending_.reset();
    {
        std::lock_guard lock(queue_mutex_);
        --outstanding_messages_;
    }
    while (!in_flight_ && !waiting_messages_.empty()) {
        auto next = std::move(waiting_messages_.front());
        waiting_messages_.pop_front();
        start_reply(std::move(next));
    }
}

void Session::apply(Flush& e) { flushes_.push_back(std::move(e.promise)); }

void Session::publish() {
    auto view = conversation_.snapshot();
    auto metrics = conversation_.metrics();
    std::lock_guard lock(published_mutex_);
    published_view_ = std::move(view);
    published_metrics_ = metrics;
}

}  // namespace vdm::orchestrator
