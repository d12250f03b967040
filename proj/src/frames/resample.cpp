#include "vdm/frames/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vdm::frames {

std::pair<int, int> fit_long_side(int width, int height, int long_side) {
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be positive");
    if (long_side < 1) throw std::invalid_argument("long side must be positive");
    const int longest = std::max(width, height);
    if (longest <= long_side) return {width, height};
    const auto scale = [&](int side) {
        const auto scaled = static_cast<long long>(side) * long_side;
        return std::max(1, static_cast<int>((scaled + longest / 2) / longest));
    };
    return {scale(width), scale(height)};
}

namespace kernels {
namespace {

void check(const PixelView& src, const MutablePixelView& dst) {
    if (src.channels != dst.channels || src.channels < 1) {
        throw std::invalid_argument("channel count mismatch");
    }
    if (dst.width < 1 || dst.height < 1 || dst.width > src.width || dst.height > src.height) {
        throw std::invalid_argument("downscale target must be non-empty and no larger than source");
    }
    if (src.data.size() < static_cast<std::size_t>(src.width) * src.height * src.channels ||
        dst.data.size() < static_cast<std::size_t>(dst.width) * dst.height * dst.channels) {
        throw std::invalid_argument("pixel buffer too small");
    }
}

// Source box of destination index i: [floor(i*s/d), floor((i+1)*s/d)).
// Non-empty whenever s >= d.
std::vector<int> box_edges(int src, int dst) {
    std::vector<int> edges(static_cast<std::size_t>(dst) + 1);
    for (int i = 0; i <= dst; ++i) {
        edges[static_cast<std::size_t>(i)] =
            static_cast<int>(static_cast<long long>(i) * src / dst);
    }
    return edges;
}

void downscale_row(const PixelView& src, const MutablePixelView& dst, const std::vector<int>& xs,
                   const std::vector<int>& ys, int row) {
    const int c = src.channels;
    const int y0 = ys[static_cast<std::size_t>(row)];
    const int y1 = ys[static_cast<std::size_t>(row) + 1];
    for (int col = 0; col < dst.width; ++col) {
        const int x0 = xs[static_cast<std::size_t>(col)];
        const int x1 = xs[static_cast<std::size_t>(col) + 1];
        const auto area = static_cast<std::uint64_t>(x1 - x0) * static_cast<std::uint64_t>(y1 - y0);
        for (int ch = 0; ch < c; ++ch) {
            std::uint64_t sum = 0;
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* line = src.data.data() + (static_cast<std::size_t>(y) * src.width) * c;
                for (int x = x0; x < x1; ++x) sum += line[static_cast<std::size_t>(x) * c + ch];
            }
            const auto mean = (sum + area / 2) / area;
            dst.data[(static_cast<std::size_t>(row) * dst.width + col) * c + ch] =
                static_cast<std::uint8_t>(mean);
        }
    }
}

}  // namespace

void downscale_area_serial(const PixelView& src, const MutablePixelView& dst) {
    check(src, dst);
    const auto xs = box_edges(src.width, dst.width);
    const auto ys = box_edges(src.height, dst.height);
    for (int row = 0; row < dst.height; ++row) downscale_row(src, dst, xs, ys, row);
}

void downscale_area_parallel(const PixelView& src, const MutablePixelView& dst) {
    check(src, dst);
    const auto xs = box_edges(src.width, dst.width);
    const auto ys = box_edges(src.height, dst.height);
    const int c = src.channels;
    const std::size_t row_values = static_cast<std::size_t>(src.width) * c;
#pragma omp parallel
    {
        // Vertical box sums for one destination row, then horizontal boxes
        // over them. Exact integer sums, so the result matches the reference.
        std::vector<std::uint32_t> column_sums(row_values);
#pragma omp for schedule(static)
        for (int row = 0; row < dst.height; ++row) {
            const int y0 = ys[static_cast<std::size_t>(row)];
            const int y1 = ys[static_cast<std::size_t>(row) + 1];
            std::fill(column_sums.begin(), column_sums.end(), 0U);
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* line = src.data.data() + static_cast<std::size_t>(y) * row_values;
                for (std::size_t i = 0; i < row_values; ++i) column_sums[i] += line[i];
            }
            std::uint8_t* out = dst.data.data() + static_cast<std::size_t>(row) * dst.width * c;
            for (int col = 0; col < dst.width; ++col) {
                const int x0 = xs[static_cast<std::size_t>(col)];
                const int x1 = xs[static_cast<std::size_t>(col) + 1];
                const auto area = static_cast<std::uint64_t>(x1 - x0) * static_cast<std::uint64_t>(y1 - y0);
                for (int ch = 0; ch < c; ++ch) {
                    std::uint64_t sum = 0;
                    for (int x = x0; x < x1; ++x) sum += column_sums[static_cast<std::size_t>(x) * c + ch];
                    out[static_cast<std::size_t>(col) * c + ch] = static_cast<std::uint8_t>((sum + area / 2) / area);
                }
            }
        }
    }
}

}  // namespace kernels
}  // namespace vdm::frames
