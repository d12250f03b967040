#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace vdm::frames {

/// Interleaved 8-bit pixels, row-major, no padding between rows.
struct PixelView {
    std::span<const std::uint8_t> data;
    int width = 0;
    int height = 0;
    int channels = 0;
};

struct MutablePixelView {
    std::span<std::uint8_t> data;
    int width = 0;
    int height = 0;
    int channels = 0;
};

/// Target size whose long side is at most `long_side`, aspect ratio kept to
/// within rounding. Never upscales; never returns a side below 1.
std::pair<int, int> fit_long_side(int width, int height, int long_side);

namespace kernels {

/// Box-filter (area) downscale with integer source boxes and rounded means.
/// dst must not be larger than src in either dimension. Reference version.
void downscale_area_serial(const PixelView& src, const MutablePixelView& dst);

/// Same arithmetic as the serial kernel, rows split across OpenMP threads.
/// Output is bit-identical to downscale_area_serial.
void downscale_area_parallel(const PixelView& src, const MutablePixelView& dst);

}  // namespace kernels
}  // namespace vdm::frames
