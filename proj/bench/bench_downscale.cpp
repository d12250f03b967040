// Serial reference vs OpenMP area downscale on camera-sized frames.

#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>
#include <vector>

#include "vdm/frames/resample.hpp"

namespace {

using vdm::frames::MutablePixelView;
using vdm::frames::PixelView;

struct Case {
    std::vector<std::uint8_t> src;
    std::vector<std::uint8_t> dst;
    int sw, sh, dw, dh;
};

Case make_case(int sw, int sh) {
    const auto [dw, dh] = vdm::frames::fit_long_side(sw, sh, 512);
    Case c{std::vector<std::uint8_t>(static_cast<std::size_t>(sw) * sh * 3),
           std::vector<std::uint8_t>(static_cast<std::size_t>(dw) * dh * 3), sw, sh, dw, dh};
    std::mt19937 rng(7);
    for (auto& b : c.src) b = static_cast<std::uint8_t>(rng());
    return c;
}

template <void (*Kernel)(const PixelView&, const MutablePixelView&)>
void run(benchmark::State& state) {
    auto c = make_case(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const PixelView src{c.src, c.sw, c.sh, 3};
    const MutablePixelView dst{c.dst, c.dw, c.dh, 3};
    for (auto _ : state) {
        Kernel(src, dst);
        benchmark::DoNotOptimize(c.dst.data());
        benchmark::ClobberMemory();
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(c.src.size()));
    state.counters["threads"] = omp_get_max_threads();
}

void sizes(benchmark::internal::Benchmark* b) {
    b->Args({1280, 720})->Args({1920, 1080})->Args({3840, 2160})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(run<vdm::frames::kernels::downscale_area_serial>)->Name("downscale_area/serial")->Apply(sizes);
BENCHMARK(run<vdm::frames::kernels::downscale_area_parallel>)->Name("downscale_area/parallel")->Apply(sizes);
BENCHMARK_MAIN();
