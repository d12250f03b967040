#include "vdm/frames/resolution_policy.hpp"

#include <spdlog/spdlog.h>

#include "vdm/frames/codec.hpp"

namespace vdm::frames {

void ResolutionPolicyConfig::validate() const {
    if (downscale_long_side < 64) {
        throw std::invalid_argument("resolution.downscale_long_side must be >= 64");
    }
}

void to_json(nlohmann::json& j, const ResolutionPolicyConfig& c) {
    j = {{"downscale_long_side", c.downscale_long_side}, {"enabled", c.enabled}};
}

void from_json(const nlohmann::json& j, ResolutionPolicyConfig& c) {
    c.downscale_long_side = j.value("downscale_long_side", c.downscale_long_side);
    c.enabled = j.value("enabled", c.enabled);
}

int apply_resolution_policy(ContextBuffer& buffer, const ResolutionPolicyConfig& policy) {
    if (!policy.enabled) return 0;

    const Frame* newest = nullptr;
    for (const auto& e : buffer.elements()) {
        if (const auto* f = std::get_if<Frame>(&e)) newest = f;
    }
    if (newest == nullptr) return 0;
    const FrameId newest_id = newest->frame_id;

    std::vector<Frame> updates;
    for (const auto& e : buffer.elements()) {
        const auto* f = std::get_if<Frame>(&e);
        if (f == nullptr || f->frame_id == newest_id || !f->is_full_resolution) continue;
        Frame updated = *f;
        updated.is_full_resolution = false;
        try {
            auto scaled = downscale(FrameImage{f->image, f->width, f->height}, policy.downscale_long_side);
            updated.image = std::move(scaled.image);
            updated.width = scaled.width;
            updated.height = scaled.height;
        } catch (const std::exception& ex) {
            spdlog::warn("could not downscale frame {}: {}; keeping original bytes", f->frame_id.value,
                         ex.what());
        }
        updates.push_back(std::move(updated));
    }
    for (const auto& u : updates) buffer.replace_frame(u);
    return static_cast<int>(updates.size());
}

}  // namespace vdm::frames
