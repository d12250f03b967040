#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/context/context_buffer.hpp"

namespace vdm::llm {

/// Default system instructions: the persona prompt the agent was tuned with.
extern const std::string_view kDefaultSystemInstructions;

/// Prefix under which a frame summary is shown to the model.
inline constexpr std::string_view kSummaryPrefix = "[You saw]: ";
/// Stand-in for a frame when the backend cannot take images.
inline constexpr std::string_view kImageUnavailable = "[image unavailable]";

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct TextPart {
    std::string text;
    friend bool operator==(const TextPart&, const TextPart&) = default;
};

struct ImagePart {
    /// data:image/jpeg;base64,... URI
    std::string data_uri;
    friend bool operator==(const ImagePart&, const ImagePart&) = default;
};

using Part = std::variant<TextPart, ImagePart>;

struct Message {
    Role role = Role::User;
    std::vector<Part> parts;
    friend bool operator==(const Message&, const Message&) = default;
};

struct ChatVisionRequest {
    std::vector<Message> messages;
    std::string model_id;
    int max_tokens = 256;
    double temperature = 0.7;

    std::size_t image_part_count() const;
    friend bool operator==(const ChatVisionRequest&, const ChatVisionRequest&) = default;
};

struct RenderOptions {
    std::string model_id = "gpt-4o";
    int max_tokens = 256;
    double temperature = 0.7;
    /// Render frames as kImageUnavailable text for text-only backends.
    bool text_only = false;
};

/// Appends a part to the request, opening a new message only when the role
/// differs from the last message's role.
void append_part(ChatVisionRequest& request, Role role, Part part);

/// Adds one buffer element in its rendered form.
void append_element(ChatVisionRequest& request, const ContextElement& element, bool text_only);

/// System message first, then every element in buffer order. Pure.
ChatVisionRequest render_prompt(const PromptView& view, const RenderOptions& options = {});

/// Rough prompt cost: ceil(text chars / 4) + 170 per image. An estimate for
/// monitoring prompt growth, not a billing figure.
std::size_t estimate_tokens(const ChatVisionRequest& request);

inline constexpr std::size_t kTokensPerImage = 170;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);
std::string to_data_uri(const ImageData& image);

/// OpenAI-compatible /chat/completions body.
nlohmann::json to_openai_json(const ChatVisionRequest& request);

}  // namespace vdm::llm
