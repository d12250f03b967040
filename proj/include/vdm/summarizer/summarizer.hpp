#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vdm/context/context_buffer.hpp"
#include "vdm/llm/backend.hpp"

namespace vdm::summarizer {

inline constexpr std::string_view kDefaultInstruction =
    "Briefly describe, in at most two sentences, what you saw in these images, as a memory note "
    "to yourself. Do not mention that they are images.";

struct SummarizerConfig {
    std::string instruction{kDefaultInstruction};
    std::string model_id = "gpt-4o";
    /// Summaries have to stay much smaller than the frames they replace.
    int max_tokens = 80;
    double temperature = 0.7;
};

/// What the summariser sees: everything strictly before the run (earlier
/// dialogue and summaries), then the run's frames, then the instruction.
/// Elements after the run are never included.
struct SummaryRequestContext {
    std::string system_instructions;
    std::vector<ContextElement> prefix_elements;
    std::vector<Frame> run_frames;
    std::string summariser_instruction;
};

/// Throws std::out_of_range if the run does not match the view.
SummaryRequestContext build_summary_request(const PromptView& view, const SummarisationRun& run,
                                            std::string_view instruction = kDefaultInstruction);

llm::ChatVisionRequest render_summary_request(const SummaryRequestContext& ctx,
                                              const SummarizerConfig& config);

/// Asks the backend for a description of the run. Throws llm::BackendError
/// (EmptySummary on a blank reply) and mutates nothing.
Summary summarise_frames(const SummaryRequestContext& ctx, llm::LlmBackend& backend,
                         const SummarizerConfig& config, SessionTime now);

/// Full routine: build request, summarise, swap the run for the summary.
/// On backend failure the buffer is left untouched and the error propagates;
/// the next append_frame re-selects the run.
Summary run_summarisation(ContextBuffer& buffer, const SummarisationRun& run,
                          llm::LlmBackend& backend, const SummarizerConfig& config,
                          SessionTime now);

}  // namespace vdm::summarizer
