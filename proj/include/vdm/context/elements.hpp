#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vdm {

/// Milliseconds since session start. All buffer timestamps use this clock.
using SessionTime = std::chrono::milliseconds;

struct FrameId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(FrameId, FrameId) = default;
};

enum class MediaType { Jpeg, Png };

std::string_view to_mime(MediaType type);

/// Encoded image payload. Bytes are shared and never mutated after construction,
/// so copying a Frame is cheap and still behaves like a deep copy.
struct ImageData {
    std::shared_ptr<const std::vector<std::uint8_t>> bytes;
    MediaType media_type = MediaType::Jpeg;

    ImageData() = default;
    ImageData(std::vector<std::uint8_t> raw, MediaType type);

    std::size_t size() const { return bytes ? bytes->size() : 0; }
    const std::vector<std::uint8_t>& data() const;

    friend bool operator==(const ImageData& a, const ImageData& b);
};

struct Frame {
    FrameId frame_id;
    SessionTime captured_at{0};
    ImageData image;
    int width = 0;
    int height = 0;
    bool is_full_resolution = true;

    friend bool operator==(const Frame&, const Frame&) = default;
};

enum class Speaker { User, Agent };

struct DialogueLine {
    Speaker speaker = Speaker::User;
    std::string text;
    SessionTime at{0};

    friend bool operator==(const DialogueLine&, const DialogueLine&) = default;
};

struct Summary {
    std::string text;
    std::vector<FrameId> covers_frame_ids;
    SessionTime created_at{0};

    friend bool operator==(const Summary&, const Summary&) = default;
};

using ContextElement = std::variant<Frame, DialogueLine, Summary>;

inline bool is_frame(const ContextElement& e) { return std::holds_alternative<Frame>(e); }

/// Compact label used by traces and logs: F3, L, R, S(1,2).
std::string element_label(const ContextElement& e);
std::string trace_string(const std::vector<ContextElement>& elements);

/// Whitespace trim used for dialogue validation and summary cleanup.
std::string trim(std::string_view text);

}  // namespace vdm
