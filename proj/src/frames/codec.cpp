#include "vdm/frames/codec.hpp"

#include <algorithm>
#include <array>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "vdm/frames/resample.hpp"

namespace vdm::frames {
namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

// libjpeg pads a truncated stream with grey and reports success, so the end
// marker is checked explicitly.
bool has_jpeg_end_marker(std::span<const std::uint8_t> bytes) {
    std::size_t end = bytes.size();
    while (end > 2 && bytes[end - 1] == 0x00) --end;
    return end >= 4 && bytes[end - 2] == 0xFF && bytes[end - 1] == 0xD9;
}

bool has_png_end_chunk(std::span<const std::uint8_t> bytes) {
    static constexpr std::array<std::uint8_t, 4> kIend{'I', 'E', 'N', 'D'};
    if (bytes.size() < kPngSignature.size() + 12) return false;
    auto tail = bytes.subspan(bytes.size() - 8, 4);
    return std::equal(tail.begin(), tail.end(), kIend.begin());
}

std::vector<std::uint8_t> encode_jpeg(const cv::Mat& pixels, int quality) {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".jpg", pixels, out, {cv::IMWRITE_JPEG_QUALITY, quality})) {
        throw ImageDecodeError("JPEG encoding failed");
    }
    return out;
}

cv::Mat decode(const std::vector<std::uint8_t>& bytes) {
    cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat pixels = cv::imdecode(raw, cv::IMREAD_COLOR);
    if (pixels.empty()) throw ImageDecodeError("image data could not be decoded");
    return pixels;
}

}  // namespace

std::optional<MediaType> sniff_media_type(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return MediaType::Jpeg;
    }
    if (bytes.size() >= kPngSignature.size() &&
        std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
        return MediaType::Png;
    }
    return std::nullopt;
}

FrameImage encode_frame(std::vector<std::uint8_t> bytes, std::optional<MediaType> declared) {
    if (bytes.empty()) throw ImageDecodeError("empty image data");
    const auto sniffed = sniff_media_type(bytes);
    if (!sniffed) throw ImageDecodeError("unsupported image format (expected JPEG or PNG)");
    if (declared && *declared != *sniffed) {
        throw ImageDecodeError(std::string("declared ") + std::string(to_mime(*declared)) +
                               " but data is " + std::string(to_mime(*sniffed)));
    }
    if (*sniffed == MediaType::Jpeg && !has_jpeg_end_marker(bytes)) {
        throw ImageDecodeError("truncated JPEG data (missing end-of-image marker)");
    }
    if (*sniffed == MediaType::Png && !has_png_end_chunk(bytes)) {
        throw ImageDecodeError("truncated PNG data (missing IEND chunk)");
    }
    const cv::Mat pixels = decode(bytes);
    FrameImage out;
    out.width = pixels.cols;
    out.height = pixels.rows;
    if (*sniffed == MediaType::Jpeg) {
        out.image = ImageData(std::move(bytes), MediaType::Jpeg);
    } else {
        out.image = ImageData(encode_jpeg(pixels, kJpegQuality), MediaType::Jpeg);
    }
    return out;
}

FrameImage downscale(const FrameImage& source, int long_side, int jpeg_quality) {
    const auto [width, height] = fit_long_side(source.width, source.height, long_side);
    if (width == source.width && height == source.height) return source;

    cv::Mat pixels = decode(source.image.data());
    if (!pixels.isContinuous()) pixels = pixels.clone();
    cv::Mat scaled(height, width, pixels.type());
    kernels::downscale_area_parallel(
        PixelView{{pixels.data, pixels.total() * pixels.elemSize()}, pixels.cols, pixels.rows,
                  pixels.channels()},
        MutablePixelView{{scaled.data, scaled.total() * scaled.elemSize()}, width, height,
                         scaled.channels()});
    return FrameImage{ImageData(encode_jpeg(scaled, jpeg_quality), MediaType::Jpeg), width, height};
}

Frame make_frame(FrameImage image, FrameId id, SessionTime at) {
    Frame frame;
    frame.frame_id = id;
    frame.captured_at = at;
    frame.image = std::move(image.image);
    frame.width = image.width;
    frame.height = image.height;
    frame.is_full_resolution = true;
    return frame;
}

}  // namespace vdm::frames
