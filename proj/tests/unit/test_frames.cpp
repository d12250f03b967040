#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include "test_support.hpp"
#include "vdm/frames/codec.hpp"
#include "vdm/frames/resample.hpp"
#include "vdm/frames/resolution_policy.hpp"
#include "vdm/frames/source.hpp"

using namespace vdm;
using namespace vdm::frames;

namespace {

std::vector<std::uint8_t> random_pixels(int w, int h, int c, std::mt19937& rng) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * c);
    for (auto& p : px) p = static_cast<std::uint8_t>(rng());
    return px;
}

Frame real_frame(std::uint64_t id, int w, int h) {
    return make_frame(encode_frame(test::make_jpeg(w, h, static_cast<int>(id))), FrameId{id},
                      SessionTime(static_cast<long long>(id)));
}

}  // namespace

TEST_CASE("fit_long_side") {
    CHECK(fit_long_side(1920, 1080, 512) == std::pair{512, 288});
    CHECK(fit_long_side(1080, 1920, 512) == std::pair{288, 512});
    CHECK(fit_long_side(320, 240, 512) == std::pair{320, 240});
    CHECK(fit_long_side(512, 100, 512) == std::pair{512, 100});
    CHECK(fit_long_side(4000, 3, 512) == std::pair{512, 1});
    CHECK(fit_long_side(640, 480, 512) == std::pair{512, 384});
    CHECK_THROWS_AS(fit_long_side(0, 10, 512), std::invalid_argument);
}

TEST_CASE("area downscale on an exact 2x2 box") {
    const std::vector<std::uint8_t> src{10, 20, 30, 40, 50, 60, 70, 80};
    std::vector<std::uint8_t> dst(2);
    kernels::downscale_area_serial({src, 4, 2, 1}, {dst, 2, 1, 1});
    CHECK(dst == std::vector<std::uint8_t>{35, 55});
    std::fill(dst.begin(), dst.end(), 0);
    kernels::downscale_area_parallel({src, 4, 2, 1}, {dst, 2, 1, 1});
    CHECK(dst == std::vector<std::uint8_t>{35, 55});
}

TEST_CASE("area downscale keeps a constant image constant") {
    std::vector<std::uint8_t> src(37 * 23 * 3, 77);
    std::vector<std::uint8_t> dst(10 * 7 * 3);
    kernels::downscale_area_serial({src, 37, 23, 3}, {dst, 10, 7, 3});
    CHECK(std::all_of(dst.begin(), dst.end(), [](std::uint8_t v) { return v == 77; }));
}

TEST_CASE("parallel kernel is bit-identical to the serial reference") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = std::uniform_int_distribution<int>(1, 300)(rng);
        const int h = std::uniform_int_distribution<int>(1, 300)(rng);
        const int c = trial % 2 == 0 ? 3 : 1;
        const int dw = std::uniform_int_distribution<int>(1, w)(rng);
        const int dh = std::uniform_int_distribution<int>(1, h)(rng);
        const auto src = random_pixels(w, h, c, rng);
        std::vector<std::uint8_t> a(static_cast<std::size_t>(dw) * dh * c);
        std::vector<std::uint8_t> b(a.size(), 1);
        kernels::downscale_area_serial({src, w, h, c}, {a, dw, dh, c});
        kernels::downscale_area_parallel({src, w, h, c}, {b, dw, dh, c});
        REQUIRE(a == b);
    }
}

TEST_CASE("kernels refuse upscaling") {
    std::vector<std::uint8_t> src(4, 0);
    std::vector<std::uint8_t> dst(9, 0);
    CHECK_THROWS(kernels::downscale_area_serial({src, 2, 2, 1}, {dst, 3, 3, 1}));
    CHECK_THROWS(kernels::downscale_area_parallel({src, 2, 2, 1}, {dst, 3, 3, 1}));
}

TEST_CASE("encode_frame keeps JPEG bytes and measures size") {
    const auto jpeg = test::make_jpeg(64, 48);
    const auto image = encode_frame(jpeg);
    CHECK(image.width == 64);
    CHECK(image.height == 48);
    CHECK(image.image.data() == jpeg);
    CHECK(image.image.media_type == MediaType::Jpeg);
}

TEST_CASE("encode_frame converts a 2x2 PNG to JPEG") {
    const auto image = encode_frame(test::make_png(2, 2), MediaType::Png);
    CHECK(image.width == 2);
    CHECK(image.height == 2);
    CHECK(sniff_media_type(image.image.data()) == MediaType::Jpeg);
    CHECK(test::decoded_size(image.image.data()) == std::pair{2, 2});
}

TEST_CASE("encode_frame rejects bad input") {
    CHECK_THROWS_AS(encode_frame({}), ImageDecodeError);
    CHECK_THROWS_WITH_AS(encode_frame({'G', 'I', 'F', '8', '9', 'a'}), doctest::Contains("unsupported"),
                         ImageDecodeError);
    auto truncated = test::make_jpeg(64, 48);
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_WITH_AS(encode_frame(truncated), doctest::Contains("truncated"), ImageDecodeError);
    auto png = test::make_png(16, 16);
    png.resize(png.size() - 20);
    CHECK_THROWS_AS(encode_frame(png), ImageDecodeError);
    CHECK_THROWS_WITH_AS(encode_frame(test::make_jpeg(8, 8), MediaType::Png), doctest::Contains("declared"),
                         ImageDecodeError);
}

TEST_CASE("downscale: 1920x1080 becomes 512x288 and small images are untouched") {
    const auto big = encode_frame(test::make_jpeg(1920, 1080));
    const auto scaled = downscale(big, 512);
    CHECK(scaled.width == 512);
    CHECK(scaled.height == 288);
    CHECK(test::decoded_size(scaled.image.data()) == std::pair{512, 288});

    const auto small = encode_frame(test::make_jpeg(320, 240));
    const auto same = downscale(small, 512);
    CHECK(same.image.data() == small.image.data());
    CHECK(same.width == 320);
}

TEST_CASE("property: downscaled frames decode to the size they claim") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        const int w = std::uniform_int_distribution<int>(1, 900)(rng);
        const int h = std::uniform_int_distribution<int>(1, 900)(rng);
        const auto image = encode_frame(test::make_jpeg(w, h, trial));
        const auto scaled = downscale(image, 256);
        CHECK(std::max(scaled.width, scaled.height) <= 256);
        CHECK(scaled.width <= w);
        CHECK(scaled.height <= h);
        CHECK(test::decoded_size(scaled.image.data()) == std::pair{scaled.width, scaled.height});
    }
}

TEST_CASE("resolution policy keeps only the newest frame at full resolution") {
    ContextBuffer buffer("sys", SummarisationPolicy(8, 3));
    ResolutionPolicyConfig config;
    buffer.append_frame(real_frame(1, 1280, 720));
    CHECK(apply_resolution_policy(buffer, config) == 0);
    CHECK(std::get<Frame>(buffer.elements()[0]).is_full_resolution);

    buffer.append_dialogue(test::user_line("hi"));
    buffer.append_frame(real_frame(2, 1280, 720));
    CHECK(apply_resolution_policy(buffer, config) == 1);
    const auto& old = std::get<Frame>(buffer.elements()[0]);
    const auto& newest = std::get<Frame>(buffer.elements()[2]);
    CHECK_FALSE(old.is_full_resolution);
    CHECK(old.width == 512);
    CHECK(old.height == 288);
    CHECK(test::decoded_size(old.image.data()) == std::pair{512, 288});
    CHECK(newest.is_full_resolution);
    CHECK(newest.width == 1280);
    const auto old_bytes = old.image;

    // Already reduced frames are not touched again.
    buffer.append_frame(real_frame(3, 200, 100));
    CHECK(apply_resolution_policy(buffer, config) == 1);
    const auto& second = std::get<Frame>(buffer.elements()[2]);
    CHECK_FALSE(second.is_full_resolution);
    CHECK(second.width == 512);
    CHECK(std::get<Frame>(buffer.elements()[0]).image == old_bytes);
}

TEST_CASE("resolution policy flags small frames without re-encoding them") {
    ContextBuffer buffer("sys", SummarisationPolicy(8, 3));
    const auto first = real_frame(1, 200, 100);
    buffer.append_frame(first);
    buffer.append_frame(real_frame(2, 200, 100));
    apply_resolution_policy(buffer, {});
    const auto& f = std::get<Frame>(buffer.elements()[0]);
    CHECK_FALSE(f.is_full_resolution);
    CHECK(f.image.data() == first.image.data());
}

TEST_CASE("resolution policy survives undecodable bytes") {
    ContextBuffer buffer("sys", SummarisationPolicy(8, 3));
    auto broken = test::frame(1, 2000, 1000);
    buffer.append_frame(broken);
    buffer.append_frame(test::frame(2));
    CHECK(apply_resolution_policy(buffer, {}) == 1);
    const auto& f = std::get<Frame>(buffer.elements()[0]);
    CHECK_FALSE(f.is_full_resolution);
    CHECK(f.image == broken.image);
}

TEST_CASE("resolution policy can be disabled") {
    ContextBuffer buffer("sys", SummarisationPolicy(8, 3));
    buffer.append_frame(real_frame(1, 800, 600));
    buffer.append_frame(real_frame(2, 800, 600));
    ResolutionPolicyConfig config;
    config.enabled = false;
    CHECK(apply_resolution_policy(buffer, config) == 0);
    CHECK(std::get<Frame>(buffer.elements()[0]).is_full_resolution);
    config.enabled = true;
    config.downscale_long_side = 10;
    CHECK_THROWS_WITH(config.validate(), doctest::Contains("resolution.downscale_long_side"));
}

TEST_CASE("video source samples one frame per interval") {
    const auto dir = test::fresh_dir("video");
    const auto path = dir / "clip.avi";
    test::write_test_video(path, 12.0, 10.0);
    VideoFileSource source(path, 5000);
    CHECK(source.fps() == doctest::Approx(10.0));
    const auto frames = drain(source);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].timeline == SessionTime(0));
    CHECK(frames[1].timeline == SessionTime(5000));
    CHECK(frames[2].timeline == SessionTime(10000));
    CHECK(frames[0].image.width == 64);
    CHECK(frames[0].image.height == 48);
    CHECK(source.exhausted());
}

TEST_CASE("video source honours max_frames and short intervals") {
    const auto dir = test::fresh_dir("video-short");
    const auto path = dir / "clip.avi";
    test::write_test_video(path, 2.0, 10.0);
    VideoFileSource capped(path, 100, 4);
    CHECK(drain(capped).size() == 4);
    VideoFileSource dense(path, 100);
    CHECK(drain(dense).size() == 20);
}

TEST_CASE("video source open errors") {
    CHECK_THROWS_AS(VideoFileSource("/nonexistent/clip.mp4", 5000), SourceOpenError);
    const auto dir = test::fresh_dir("video-bad");
    test::write_bytes(dir / "junk.mp4", {1, 2, 3, 4});
    CHECK_THROWS_AS(VideoFileSource(dir / "junk.mp4", 5000), SourceOpenError);
}

TEST_CASE("directory source reads images in filename order and skips bad files") {
    const auto dir = test::fresh_dir("images");
    test::write_bytes(dir / "b.png", test::make_png(20, 10, 2));
    test::write_bytes(dir / "a.jpg", test::make_jpeg(30, 10, 1));
    test::write_bytes(dir / "c.jpeg", test::make_jpeg(40, 10, 3));
    test::write_bytes(dir / "b2.jpg", {0xFF, 0xD8, 0xFF, 0x00});
    test::write_bytes(dir / "notes.txt", {'h', 'i'});
    ImageDirectorySource source(dir, 1000);
    CHECK(source.files().size() == 4);
    const auto frames = drain(source);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].image.width == 30);
    CHECK(frames[1].image.width == 20);
    CHECK(frames[2].image.width == 40);
    CHECK(frames[2].timeline == SessionTime(2000));
    CHECK_THROWS_AS(ImageDirectorySource(dir / "missing", 1000), SourceOpenError);
}

TEST_CASE("push source") {
    PushSource source;
    CHECK_FALSE(source.next());
    CHECK_FALSE(source.exhausted());
    source.submit(encode_frame(test::make_jpeg(8, 8)));
    source.submit(encode_frame(test::make_jpeg(9, 9)));
    CHECK(source.pending() == 2);
    CHECK(source.next()->image.width == 8);
    source.close();
    CHECK_THROWS(source.submit(encode_frame(test::make_jpeg(8, 8))));
    CHECK_FALSE(source.exhausted());
    CHECK(source.next()->image.width == 9);
    CHECK(source.exhausted());
}

TEST_CASE("source config") {
    CHECK(parse_source_spec("push", 5000).kind == SourceKind::Push);
    const auto video = parse_source_spec("video:/tmp/a.mp4", 2000);
    CHECK(video.kind == SourceKind::VideoFile);
    CHECK(*video.path == "/tmp/a.mp4");
    CHECK(video.interval_ms == 2000);
    CHECK(parse_source_spec("dir:frames", 5000).kind == SourceKind::ImageDirectory);
    CHECK_THROWS_AS(parse_source_spec("webcam:0", 5000), std::invalid_argument);
    CHECK_THROWS_AS(parse_source_spec("video:", 5000), std::invalid_argument);

    FrameSourceConfig c;
    c.interval_ms = 50;
    CHECK_THROWS_WITH(c.validate(), doctest::Contains("source.interval_ms"));
    c.interval_ms = 5000;
    c.kind = SourceKind::VideoFile;
    CHECK_THROWS_WITH(c.validate(), doctest::Contains("source.path"));

    const nlohmann::json j = video;
    FrameSourceConfig back;
    from_json(j, back);
    CHECK(back.kind == SourceKind::VideoFile);
    CHECK(*back.path == "/tmp/a.mp4");
}

TEST_CASE("frame pump delivers every frame on a timer") {
    const auto dir = test::fresh_dir("pump");
    for (int i = 0; i < 4; ++i) test::write_bytes(dir / ("f" + std::to_string(i) + ".jpg"), test::make_jpeg(8, 8, i));
    ImageDirectorySource source(dir, 100);
    std::atomic<int> delivered{0};
    const auto started = std::chrono::steady_clock::now();
    FramePump pump(source, std::chrono::milliseconds(40), [&](SourcedFrame) { ++delivered; });
    pump.wait();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    CHECK(delivered == 4);
    CHECK(pump.finished());
    CHECK(elapsed >= std::chrono::milliseconds(120));
}

TEST_CASE("frame pump stops on request") {
    PushSource source;
    FramePump pump(source, std::chrono::milliseconds(10), [](SourcedFrame) {});
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    CHECK_FALSE(pump.finished());
    pump.stop();
    pump.wait();
    CHECK(pump.finished());
}
