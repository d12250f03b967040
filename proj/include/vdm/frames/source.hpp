#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdm/frames/codec.hpp"

namespace vdm::frames {

enum class SourceKind { VideoFile, ImageDirectory, Push };

struct FrameSourceConfig {
    SourceKind kind = SourceKind::Push;
    int interval_ms = 5000;
    std::optional<std::filesystem::path> path;
    std::optional<int> max_frames;

    /// Throws std::invalid_argument naming the field.
    void validate() const;
};

void to_json(nlohmann::json& j, const FrameSourceConfig& c);
void from_json(const nlohmann::json& j, FrameSourceConfig& c);

/// Parses the CLI form: "video:PATH", "dir:PATH" or "push".
FrameSourceConfig parse_source_spec(const std::string& spec, int interval_ms);

class SourceOpenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SourcedFrame {
    FrameImage image;
    /// Position on the source's own timeline (k * interval for file sources).
    SessionTime timeline{0};
    std::string origin;
};

/// Pull-based frame stream. Per-frame failures are logged and skipped inside
/// next(); only opening the source is fatal.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    /// Next frame, or nothing if no frame is available right now.
    virtual std::optional<SourcedFrame> next() = 0;
    /// True once the stream has ended for good.
    virtual bool exhausted() const = 0;
};

/// Samples the frame nearest to k * interval on the file's timeline.
class VideoFileSource : public FrameSource {
public:
    VideoFileSource(const std::filesystem::path& path, int interval_ms,
                    std::optional<int> max_frames = std::nullopt);
    ~VideoFileSource() override;

    std::optional<SourcedFrame> next() override;
    bool exhausted() const override { return done_; }

    double fps() const { return fps_; }
    double duration_ms() const { return duration_ms_; }

private:
    struct Capture;
    std::unique_ptr<Capture> capture_;
    std::string origin_;
    int interval_ms_;
    std::optional<int> max_frames_;
    double fps_ = 0;
    long long total_frames_ = 0;
    double duration_ms_ = 0;
    long long position_ = -1;  // index of the last decoded frame
    int emitted_ = 0;
    bool done_ = false;
};

/// .jpg/.jpeg/.png files in lexicographic filename order, one per tick.
class ImageDirectorySource : public FrameSource {
public:
    ImageDirectorySource(const std::filesystem::path& dir, int interval_ms,
                         std::optional<int> max_frames = std::nullopt);

    std::optional<SourcedFrame> next() override;
    bool exhausted() const override;

    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    std::vector<std::filesystem::path> files_;
    std::size_t cursor_ = 0;
    int interval_ms_;
    std::optional<int> max_frames_;
    int emitted_ = 0;
};

/// Frames submitted from outside (the browser webcam via the gateway).
class PushSource : public FrameSource {
public:
    void submit(FrameImage image);
    /// No further submissions; the source is exhausted once drained.
    void close();

    std::optional<SourcedFrame> next() override;
    bool exhausted() const override;
    std::size_t pending() const;

private:
    mutable std::mutex mutex_;
    std::deque<FrameImage> queue_;
    bool closed_ = false;
    long long counter_ = 0;
};

std::unique_ptr<FrameSource> make_source(const FrameSourceConfig& config);

/// Drives a source on a timer and hands every frame to a callback from its
/// own thread. The source must not be used elsewhere while the pump runs.
class FramePump {
public:
    using Sink = std::function<void(SourcedFrame)>;

    FramePump(FrameSource& source, std::chrono::milliseconds interval, Sink sink);
    ~FramePump();

    FramePump(const FramePump&) = delete;
    FramePump& operator=(const FramePump&) = delete;

    void stop();
    /// Blocks until the source is exhausted or stop() is called.
    void wait();
    bool finished() const { return finished_.load(); }

private:
    void loop();

    FrameSource& source_;
    std::chrono::milliseconds interval_;
    Sink sink_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_requested_ = false;
    std::atomic<bool> finished_{false};
    std::thread thread_;
};

/// Replay-mode counterpart of FramePump: pulls everything on logical time.
std::vector<SourcedFrame> drain(FrameSource& source);

}  // namespace vdm::frames
