#include "vdm/llm/request.hpp"

#include <array>
#include <stdexcept>

namespace vdm::llm {

const std::string_view kDefaultSystemInstructions =
    "You are impersonating a friendly kid. "
    "In this conversation, what you see is represented by the images. "
    "For example, the images will show you the environment you are in and possibly the person "
    "you are talking to. "
    "Try to start the conversation by saying something about the person you are talking to if "
    "there is one, based on accessories, clothes, etc. "
    "If there is no person, try to say something about the environment, but do not describe the "
    "environment! "
    "Have a nice conversation and try to be curious! "
    "It is important that you keep your answers short and to the point. "
    "DO NOT INCLUDE EMOTICONS OR SMILEYS IN YOUR ANSWERS.";

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System:
            return "system";
        case Role::User:
            return "user";
        case Role::Assistant:
            return "assistant";
    }
    return "user";
}

std::size_t ChatVisionRequest::image_part_count() const {
    std::size_t count = 0;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) count += std::holds_alternative<ImagePart>(p) ? 1 : 0;
    }
    return count;
}

void append_part(ChatVisionRequest& request, Role role, Part part) {
    if (request.messages.empty() || request.messages.back().role != role) {
        request.messages.push_back(Message{role, {}});
    }
    request.messages.back().parts.push_back(std::move(part));
}

void append_element(ChatVisionRequest& request, const ContextElement& element, bool text_only) {
    if (const auto* frame = std::get_if<Frame>(&element)) {
        if (text_only) {
            append_part(request, Role::User, TextPart{std::string(kImageUnavailable)});
        } else {
            append_part(request, Role::User, ImagePart{to_data_uri(frame->image)});
        }
    } else if (const auto* line = std::get_if<DialogueLine>(&element)) {
        append_part(request, line->speaker == Speaker::User ? Role::User : Role::Assistant,
                    TextPart{line->text});
    } else {
        const auto& summary = std::get<Summary>(element);
        append_part(request, Role::User, TextPart{std::string(kSummaryPrefix) + summary.text});
    }
}

ChatVisionRequest render_prompt(const PromptView& view, const RenderOptions& options) {
    ChatVisionRequest request;
    request.model_id = options.model_id;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.messages.push_back(Message{Role::System, {TextPart{view.system_instructions()}}});
    for (const auto& element : view.elements()) {
        append_element(request, element, options.text_only);
    }
    return request;
}

std::size_t estimate_tokens(const ChatVisionRequest& request) {
    std::size_t chars = 0;
    std::size_t images = 0;
    for (const auto& m : request.messages) {
        for (const auto& p : m.parts) {
            if (const auto* t = std::get_if<TextPart>(&p)) {
                chars += t->text.size();
            } else {
                ++images;
            }
        }
    }
    return (chars + 3) / 4 + images * kTokensPerImage;
}

namespace {
constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = bytes[i] << 16;
        if (rest == 2) v |= bytes[i + 1] << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    bool padding = false;
    for (char c : text) {
        if (c == '\n' || c == '\r' || c == ' ') continue;
        if (c == '=') {
            padding = true;
            continue;
        }
        const int v = decode_char(c);
        if (v < 0 || padding) throw std::invalid_argument("invalid base64 input");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

std::string to_data_uri(const ImageData& image) {
    return "data:" + std::string(to_mime(image.media_type)) + ";base64," + base64_encode(image.data());
}

nlohmann::json to_openai_json(const ChatVisionRequest& request) {
    auto messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        nlohmann::json content;
        // Plain string content for single-text messages keeps the system turn
        // readable by backends that reject content arrays for that role.
        if (m.parts.size() == 1 && std::holds_alternative<TextPart>(m.parts.front())) {
            content = std::get<TextPart>(m.parts.front()).text;
        } else {
            content = nlohmann::json::array();
            for (const auto& p : m.parts) {
                if (const auto* t = std::get_if<TextPart>(&p)) {
                    content.push_back({{"type", "text"}, {"text", t->text}});
                } else {
                    content.push_back({{"type", "image_url"},
                                       {"image_url", {{"url", std::get<ImagePart>(p).data_uri}}}});
                }
            }
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
    }
    return {{"model", request.model_id},
            {"messages", std::move(messages)},
            {"max_tokens", request.max_tokens},
            {"temperature", request.temperature}};
}

}  // namespace vdm::llm
