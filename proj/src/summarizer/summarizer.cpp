#include "vdm/summarizer/summarizer.hpp"

#include <stdexcept>

namespace vdm::summarizer {

SummaryRequestContext build_summary_request(const PromptView& view, const SummarisationRun& run,
                                            std::string_view instruction) {
    const auto& elements = view.elements();
    if (run.frames.empty() || run.start_index + run.frames.size() > elements.size()) {
        throw std::out_of_range("summarisation run is out of range for this view");
    }
    for (std::size_t i = 0; i < run.frames.size(); ++i) {
        const auto* f = std::get_if<Frame>(&elements[run.start_index + i]);
        if (f == nullptr || f->frame_id != run.frames[i].frame_id) {
            throw std::out_of_range("summarisation run does not match the view at index " +
                                    std::to_string(run.start_index + i));
        }
    }
    SummaryRequestContext ctx;
    ctx.system_instructions = view.system_instructions();
    ctx.prefix_elements.assign(elements.begin(),
                               elements.begin() + static_cast<std::ptrdiff_t>(run.start_index));
    ctx.run_frames = run.frames;
    ctx.summariser_instruction = std::string(instruction);
    return ctx;
}

llm::ChatVisionRequest render_summary_request(const SummaryRequestContext& ctx,
                                              const SummarizerConfig& config) {
    llm::ChatVisionRequest request;
    request.model_id = config.model_id;
    request.max_tokens = config.max_tokens;
    request.temperature = config.temperature;
    request.messages.push_back({llm::Role::System, {llm::TextPart{ctx.system_instructions}}});
    for (const auto& element : ctx.prefix_elements) {
        llm::append_element(request, element, false);
    }
    for (const auto& frame : ctx.run_frames) {
        llm::append_element(request, frame, false);
    }
    llm::append_part(request, llm::Role::User, llm::TextPart{ctx.summariser_instruction});
    return request;
}

Summary summarise_frames(const SummaryRequestContext& ctx, llm::LlmBackend& backend,
                         const SummarizerConfig& config, SessionTime now) {
    if (ctx.run_frames.empty()) throw std::invalid_argument("no frames to summarise");
    auto completion = backend.complete(render_summary_request(ctx, config));
    auto text = trim(completion.text);
    if (text.empty()) {
        throw llm::BackendError(llm::ErrorKind::EmptySummary, "empty summary");
    }
    Summary summary;
    summary.text = std::move(text);
    summary.created_at = now;
    for (const auto& f : ctx.run_frames) summary.covers_frame_ids.push_back(f.frame_id);
    return summary;
}

Summary run_summarisation(ContextBuffer& buffer, const SummarisationRun& run,
                          llm::LlmBackend& backend, const SummarizerConfig& config,
                          SessionTime now) {
    const auto view = buffer.snapshot();
    SummaryRequestContext ctx;
    try {
        ctx = build_summary_request(view, run, config.instruction);
    } catch (const std::out_of_range& e) {
        throw StaleRunError(e.what());
    }
    auto summary = summarise_frames(ctx, backend, config, now);
    buffer.replace_run_with_summary(run, summary);
    return summary;
}

}  // namespace vdm::summarizer
