#pragma once

#include <nlohmann/json.hpp>

#include "vdm/context/context_buffer.hpp"

namespace vdm::frames {

struct ResolutionPolicyConfig {
    int downscale_long_side = 512;
    bool enabled = true;

    /// Throws std::invalid_argument naming the field.
    void validate() const;
};

void to_json(nlohmann::json& j, const ResolutionPolicyConfig& c);
void from_json(const nlohmann::json& j, ResolutionPolicyConfig& c);

/// Keeps only the newest frame at full resolution. Every other frame still
/// flagged full resolution is re-encoded to fit `downscale_long_side` and
/// flagged reduced. Frames already small enough keep their bytes. A frame that
/// fails to re-encode keeps its bytes (logged) and is flagged reduced anyway.
/// Returns the number of frames re-encoded.
int apply_resolution_policy(ContextBuffer& buffer, const ResolutionPolicyConfig& policy);

}  // namespace vdm::frames
