#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdm/context/elements.hpp"

namespace vdm {

/// Thrown when the buffer no longer holds the frames a run was selected from.
/// This is an orchestration sequencing bug, never a user error.
class StaleRunError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// n: frames allowed in the buffer before summarisation triggers.
/// m: frames summarised per routine invocation. 1 <= m < n, so at least one
/// frame always survives a summarisation.
class SummarisationPolicy {
public:
    static constexpr int kDefaultMaxFrames = 4;
    static constexpr int kDefaultChunk = 3;

    SummarisationPolicy() = default;
    /// Throws std::invalid_argument ("m must be < n", ...) on violation.
    SummarisationPolicy(int max_frames, int chunk);

    int n() const { return max_frames_; }
    int m() const { return chunk_; }

    friend bool operator==(const SummarisationPolicy&, const SummarisationPolicy&) = default;

private:
    int max_frames_ = kDefaultMaxFrames;
    int chunk_ = kDefaultChunk;
};

struct SummarisationRun {
    std::size_t start_index = 0;
    std::vector<Frame> frames;

    std::vector<FrameId> frame_ids() const;
    friend bool operator==(const SummarisationRun&, const SummarisationRun&) = default;
};

/// Earliest frame, extended while the next element is also a frame, capped at
/// max_frames. Throws std::invalid_argument if there is no frame.
SummarisationRun select_run(std::span<const ContextElement> elements, int max_frames);

std::size_t frame_count(std::span<const ContextElement> elements);

/// Immutable copy of the buffer, safe to hand to other threads.
class PromptView {
public:
    PromptView() = default;
    PromptView(std::string system_instructions, std::vector<ContextElement> elements);

    const std::string& system_instructions() const { return system_instructions_; }
    const std::vector<ContextElement>& elements() const { return elements_; }
    std::size_t size() const { return elements_.size(); }
    std::size_t frame_count() const { return vdm::frame_count(elements_); }

    friend bool operator==(const PromptView&, const PromptView&) = default;

private:
    std::string system_instructions_;
    std::vector<ContextElement> elements_;
};

/// The conversation manager's state: system instructions plus the ordered
/// interleaving of frames, dialogue lines and summaries.
///
/// Invariants kept by the mutators:
///  - elements are in insertion order, summaries sit where their first frame was
///  - frame ids strictly increase along the buffer
///  - every summary covers ids older than every retained frame
///
/// Not thread-safe; the orchestrator serializes all mutations.
class ContextBuffer {
public:
    explicit ContextBuffer(std::string system_instructions,
                           SummarisationPolicy policy = {});

    /// Throws std::invalid_argument on blank text. Never triggers summarisation.
    void append_dialogue(DialogueLine line);

    /// Appends the frame and, if the buffer now holds at least n frames,
    /// returns the run to summarise. The buffer itself is not summarised here.
    /// Throws std::invalid_argument when frame_id does not exceed every id
    /// seen so far, or when the frame has empty dimensions.
    std::optional<SummarisationRun> append_frame(Frame frame);

    SummarisationRun select_run() const;

    /// Throws StaleRunError if the run's frames are not found, consecutive,
    /// at run.start_index, or if the summary covers different ids.
    void replace_run_with_summary(const SummarisationRun& run, Summary summary);

    /// Swaps in a re-encoded version of a frame that is already in the buffer.
    /// The frame id identifies the target and must not change.
    void replace_frame(const Frame& updated);

    /// Frames allowed before the oldest one is dropped while summarisation
    /// is failing.
    std::size_t overflow_cap() const { return 2 * static_cast<std::size_t>(policy_.n()); }

    std::size_t frame_count() const { return vdm::frame_count(elements_); }
    PromptView snapshot() const { return PromptView(system_instructions_, elements_); }

    const std::vector<ContextElement>& elements() const { return elements_; }
    const std::string& system_instructions() const { return system_instructions_; }
    const SummarisationPolicy& policy() const { return policy_; }
    /// Ids dropped by the overflow cap, oldest first.
    const std::vector<FrameId>& dropped_frame_ids() const { return dropped_; }

private:
    void drop_oldest_frame();

    std::string system_instructions_;
    SummarisationPolicy policy_;
    std::vector<ContextElement> elements_;
    std::optional<FrameId> last_frame_id_;
    std::vector<FrameId> dropped_;
};

}  // namespace vdm
