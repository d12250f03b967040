#include "vdm/context/context_buffer.hpp"

#include <algorithm>
#include <spdlog/spdlog.h>

namespace vdm {

SummarisationPolicy::SummarisationPolicy(int max_frames, int chunk)
    : max_frames_(max_frames), chunk_(chunk) {
    if (chunk_ < 1) throw std::invalid_argument("m must be >= 1");
    if (max_frames_ < 2) throw std::invalid_argument("n must be >= 2");
    if (chunk_ >= max_frames_) throw std::invalid_argument("m must be < n");
}

std::vector<FrameId> SummarisationRun::frame_ids() const {
    std::vector<FrameId> ids;
    ids.reserve(frames.size());
    for (const auto& f : frames) ids.push_back(f.frame_id);
    return ids;
}

std::size_t frame_count(std::span<const ContextElement> elements) {
    return static_cast<std::size_t>(std::count_if(elements.begin(), elements.end(), is_frame));
}

SummarisationRun select_run(std::span<const ContextElement> elements, int max_frames) {
    auto first = std::find_if(elements.begin(), elements.end(), is_frame);
    if (first == elements.end()) {
        throw std::invalid_argument("select_run: buffer contains no frames");
    }
    SummarisationRun run;
    run.start_index = static_cast<std::size_t>(first - elements.begin());
    for (auto it = first; it != elements.end() && is_frame(*it); ++it) {
        if (static_cast<int>(run.frames.size()) == max_frames) break;
        run.frames.push_back(std::get<Frame>(*it));
    }
    return run;
}

PromptView::PromptView(std::string system_instructions, std::vector<ContextElement> elements)
    : system_instructions_(std::move(system_instructions)), elements_(std::move(elements)) {}

ContextBuffer::ContextBuffer(std::string system_instructions, SummarisationPolicy policy)
    : system_instructions_(std::move(system_instructions)), policy_(policy) {}

void ContextBuffer::append_dialogue(DialogueLine line) {
    if (trim(line.text).empty()) {
        throw std::invalid_argument("dialogue line text must not be empty");
    }
    elements_.emplace_back(std::move(line));
}

std::optional<SummarisationRun> ContextBuffer::append_frame(Frame frame) {
    if (frame.width < 1 || frame.height < 1) {
        throw std::invalid_argument("frame dimensions must be at least 1x1");
    }
    if (last_frame_id_ && frame.frame_id <= *last_frame_id_) {
        throw std::invalid_argument("frame_id " + std::to_string(frame.frame_id.value) +
                                    " is not greater than previous id " +
                                    std::to_string(last_frame_id_->value));
    }
    last_frame_id_ = frame.frame_id;
    elements_.emplace_back(std::move(frame));

    // Only reachable while summarisation keeps failing.
    while (frame_count() > overflow_cap()) {
        drop_oldest_frame();
    }

    if (frame_count() >= static_cast<std::size_t>(policy_.n())) {
        return select_run();
    }
    return std::nullopt;
}

SummarisationRun ContextBuffer::select_run() const {
    return vdm::select_run(elements_, policy_.m());
}

void ContextBuffer::replace_run_with_summary(const SummarisationRun& run, Summary summary) {
    if (run.frames.empty()) throw StaleRunError("run is empty");
    if (summary.covers_frame_ids != run.frame_ids()) {
        throw StaleRunError("summary covers different frame ids than the run");
    }
    if (run.start_index + run.frames.size() > elements_.size()) {
        throw StaleRunError("run extends past the end of the buffer");
    }
    for (std::size_t i = 0; i < run.frames.size(); ++i) {
        const auto* f = std::get_if<Frame>(&elements_[run.start_index + i]);
        if (f == nullptr || f->frame_id != run.frames[i].frame_id) {
            throw StaleRunError("buffer changed since the run was selected");
        }
    }
    auto first = elements_.begin() + static_cast<std::ptrdiff_t>(run.start_index);
    *first = std::move(summary);
    elements_.erase(first + 1, first + static_cast<std::ptrdiff_t>(run.frames.size()));
}

void ContextBuffer::replace_frame(const Frame& updated) {
    for (auto& e : elements_) {
        if (auto* f = std::get_if<Frame>(&e); f != nullptr && f->frame_id == updated.frame_id) {
            *f = updated;
            return;
        }
    }
    throw std::invalid_argument("replace_frame: frame " + std::to_string(updated.frame_id.value) +
                                " not in buffer");
}

void ContextBuffer::drop_oldest_frame() {
    auto it = std::find_if(elements_.begin(), elements_.end(), is_frame);
    if (it == elements_.end()) return;
    const auto id = std::get<Frame>(*it).frame_id;
    spdlog::warn("context buffer over {} frames while summarisation is failing; dropping frame {}",
                 overflow_cap(), id.value);
    dropped_.push_back(id);
    elements_.erase(it);
}

}  // namespace vdm
