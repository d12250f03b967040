#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vdm/context/elements.hpp"

namespace vdm::frames {

class ImageDecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JPEG-encoded image with its measured size, ready to become a Frame.
struct FrameImage {
    ImageData image;
    int width = 0;
    int height = 0;
};

inline constexpr int kJpegQuality = 90;

/// Recognises JPEG (FF D8 FF) and PNG signatures.
std::optional<MediaType> sniff_media_type(std::span<const std::uint8_t> bytes);

/// Validates and decodes JPEG/PNG bytes, measures them and normalises to JPEG.
/// JPEG input is kept byte-for-byte. Throws ImageDecodeError with a reason
/// (unsupported format, truncated data, undecodable).
FrameImage encode_frame(std::vector<std::uint8_t> bytes, std::optional<MediaType> declared = std::nullopt);

/// Re-encodes so the long side is at most `long_side`. Images already within
/// the limit are returned unchanged (same bytes).
FrameImage downscale(const FrameImage& source, int long_side, int jpeg_quality = kJpegQuality);

/// Frame stamped with id and time.
Frame make_frame(FrameImage image, FrameId id, SessionTime at);

}  // namespace vdm::frames
