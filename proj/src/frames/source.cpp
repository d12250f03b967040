#include "vdm/frames/source.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>
#include <spdlog/spdlog.h>

namespace vdm::frames {

namespace fs = std::filesystem;

namespace {

std::string kind_name(SourceKind kind) {
    switch (kind) {
        case SourceKind::VideoFile:
            return "video";
        case SourceKind::ImageDirectory:
            return "dir";
        case SourceKind::Push:
            return "push";
    }
    return "push";
}

SourceKind kind_from_name(const std::string& name) {
    if (name == "video") return SourceKind::VideoFile;
    if (name == "dir") return SourceKind::ImageDirectory;
    if (name == "push") return SourceKind::Push;
    throw std::invalid_argument("source.kind must be one of video, dir, push (got '" + name + "')");
}

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void FrameSourceConfig::validate() const {
    if (interval_ms < 100) throw std::invalid_argument("source.interval_ms must be >= 100");
    if (kind != SourceKind::Push && (!path || path->empty())) {
        throw std::invalid_argument("source.path is required for " + kind_name(kind) + " sources");
    }
    if (max_frames && *max_frames < 1) throw std::invalid_argument("source.max_frames must be >= 1");
}

void to_json(nlohmann::json& j, const FrameSourceConfig& c) {
    j = {{"kind", kind_name(c.kind)}, {"interval_ms", c.interval_ms}};
    if (c.path) j["path"] = c.path->string();
    if (c.max_frames) j["max_frames"] = *c.max_frames;
}

void from_json(const nlohmann::json& j, FrameSourceConfig& c) {
    if (j.contains("kind")) c.kind = kind_from_name(j.at("kind").get<std::string>());
    c.interval_ms = j.value("interval_ms", c.interval_ms);
    if (j.contains("path")) c.path = j.at("path").get<std::string>();
    if (j.contains("max_frames")) c.max_frames = j.at("max_frames").get<int>();
}

FrameSourceConfig parse_source_spec(const std::string& spec, int interval_ms) {
    FrameSourceConfig config;
    config.interval_ms = interval_ms;
    if (spec == "push") {
        config.kind = SourceKind::Push;
        return config;
    }
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon + 1 == spec.size()) {
        throw std::invalid_argument("source must be video:PATH, dir:PATH or push (got '" + spec + "')");
    }
    config.kind = kind_from_name(spec.substr(0, colon));
    config.path = spec.substr(colon + 1);
    return config;
}

// ---------------------------------------------------------------------------
// VideoFileSource

struct VideoFileSource::Capture {
    cv::VideoCapture capture;
};

VideoFileSource::VideoFileSource(const fs::path& path, int interval_ms, std::optional<int> max_frames)
    : capture_(std::make_unique<Capture>()),
      origin_(path.string()),
      interval_ms_(interval_ms),
      max_frames_(max_frames) {
    if (!fs::is_regular_file(path)) throw SourceOpenError("video file not found: " + path.string());
    if (!capture_->capture.open(path.string()) || !capture_->capture.isOpened()) {
        throw SourceOpenError("cannot open video file: " + path.string());
    }
    fps_ = capture_->capture.get(cv::CAP_PROP_FPS);
    total_frames_ = static_cast<long long>(capture_->capture.get(cv::CAP_PROP_FRAME_COUNT));
    if (!(fps_ > 0)) throw SourceOpenError("video file reports no frame rate: " + path.string());
    duration_ms_ = total_frames_ > 0 ? static_cast<double>(total_frames_) * 1000.0 / fps_ : 0.0;
}

VideoFileSource::~VideoFileSource() = default;

std::optional<SourcedFrame> VideoFileSource::next() {
    if (done_) return std::nullopt;
    if (max_frames_ && emitted_ >= *max_frames_) {
        done_ = true;
        return std::nullopt;
    }
    const double target_ms = static_cast<double>(emitted_) * interval_ms_;
    if (total_frames_ > 0 && target_ms > duration_ms_) {
        done_ = true;
        return std::nullopt;
    }
    auto target = static_cast<long long>(std::llround(target_ms * fps_ / 1000.0));
    if (total_frames_ > 0) target = std::min(target, total_frames_ - 1);
    // A later tick may map to a frame we already decoded when the interval is
    // shorter than a frame period; decode at least one more frame.
    target = std::max(target, position_ + 1);

    cv::Mat pixels;
    while (position_ < target) {
        if (!capture_->capture.read(pixels)) {
            done_ = true;
            return std::nullopt;
        }
        ++position_;
    }
    const auto timeline = SessionTime(static_cast<long long>(target_ms));
    ++emitted_;
    try {
        std::vector<std::uint8_t> jpeg;
        if (pixels.empty() || !cv::imencode(".jpg", pixels, jpeg, {cv::IMWRITE_JPEG_QUALITY, kJpegQuality})) {
            throw ImageDecodeError("frame could not be encoded");
        }
        FrameImage image{ImageData(std::move(jpeg), MediaType::Jpeg), pixels.cols, pixels.rows};
        return SourcedFrame{std::move(image), timeline, origin_ + "#" + std::to_string(position_)};
    } catch (const std::exception& ex) {
        spdlog::warn("skipping video frame {} of {}: {}", position_, origin_, ex.what());
        return next();
    }
}

// ---------------------------------------------------------------------------
// ImageDirectorySource

ImageDirectorySource::ImageDirectorySource(const fs::path& dir, int interval_ms, std::optional<int> max_frames)
    : interval_ms_(interval_ms), max_frames_(max_frames) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw SourceOpenError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) files_.push_back(entry.path());
    }
    if (ec) throw SourceOpenError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(files_.begin(), files_.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
}

bool ImageDirectorySource::exhausted() const {
    return cursor_ >= files_.size() || (max_frames_ && emitted_ >= *max_frames_);
}

std::optional<SourcedFrame> ImageDirectorySource::next() {
    while (!exhausted()) {
        const auto& path = files_[cursor_++];
        try {
            auto image = encode_frame(read_file(path));
            const auto timeline = SessionTime(static_cast<long long>(emitted_) * interval_ms_);
            ++emitted_;
            return SourcedFrame{std::move(image), timeline, path.string()};
        } catch (const std::exception& ex) {
            spdlog::warn("skipping {}: {}", path.string(), ex.what());
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// PushSource

void PushSource::submit(FrameImage image) {
    std::lock_guard lock(mutex_);
    if (closed_) throw std::logic_error("push source is closed");
    queue_.push_back(std::move(image));
}

void PushSource::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
}

std::optional<SourcedFrame> PushSource::next() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    SourcedFrame out{std::move(queue_.front()), SessionTime(0), "push#" + std::to_string(counter_++)};
    queue_.pop_front();
    return out;
}

bool PushSource::exhausted() const {
    std::lock_guard lock(mutex_);
    return closed_ && queue_.empty();
}

std::size_t PushSource::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

std::unique_ptr<FrameSource> make_source(const FrameSourceConfig& config) {
    config.validate();
    switch (config.kind) {
        case SourceKind::VideoFile:
            return std::make_unique<VideoFileSource>(*config.path, config.interval_ms, config.max_frames);
        case SourceKind::ImageDirectory:
            return std::make_unique<ImageDirectorySource>(*config.path, config.interval_ms, config.max_frames);
        case SourceKind::Push:
            return std::make_unique<PushSource>();
    }
    throw std::invalid_argument("unknown source kind");
}

// ---------------------------------------------------------------------------
// FramePump

FramePump::FramePump(FrameSource& source, std::chrono::milliseconds interval, Sink sink)
    : source_(source), interval_(interval), sink_(std::move(sink)), thread_([this] { loop(); }) {}

FramePump::~FramePump() {
    stop();
    if (thread_.joinable()) thread_.join();
}

void FramePump::stop() {
    {
        std::lock_guard lock(mutex_);
        stop_requested_ = true;
    }
    cv_.notify_all();
}

void FramePump::wait() {
    if (thread_.joinable()) thread_.join();
}

void FramePump::loop() {
    auto deadline = std::chrono::steady_clock::now();
    while (true) {
        {
            std::unique_lock lock(mutex_);
            if (cv_.wait_until(lock, deadline, [this] { return stop_requested_; })) break;
        }
        if (source_.exhausted()) break;
        if (auto frame = source_.next()) sink_(std::move(*frame));
        if (source_.exhausted()) break;
        deadline += interval_;
    }
    finished_ = true;
}

std::vector<SourcedFrame> drain(FrameSource& source) {
    std::vector<SourcedFrame> out;
    while (!source.exhausted()) {
        auto frame = source.next();
        if (!frame) break;
        out.push_back(std::move(*frame));
    }
    return out;
}

}  // namespace vdm::frames
