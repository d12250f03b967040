#include "vdm/context/elements.hpp"

#include <algorithm>
#include <cctype>

namespace vdm {

namespace {
const std::vector<std::uint8_t> kEmptyBytes;
}

std::string_view to_mime(MediaType type) {
    switch (type) {
        case MediaType::Jpeg:
            return "image/jpeg";
        case MediaType::Png:
            return "image/png";
    }
    return "application/octet-stream";
}

ImageData::ImageData(std::vector<std::uint8_t> raw, MediaType type)
    : bytes(std::make_shared<const std::vector<std::uint8_t>>(std::move(raw))), media_type(type) {}

const std::vector<std::uint8_t>& ImageData::data() const {
    return bytes ? *bytes : kEmptyBytes;
}

bool operator==(const ImageData& a, const ImageData& b) {
    return a.media_type == b.media_type && a.data() == b.data();
}

std::string element_label(const ContextElement& e) {
    if (const auto* f = std::get_if<Frame>(&e)) {
        return "F" + std::to_string(f->frame_id.value);
    }
    if (const auto* l = std::get_if<DialogueLine>(&e)) {
        return l->speaker == Speaker::User ? "L" : "R";
    }
    const auto& s = std::get<Summary>(e);
    std::string out = "S(";
    for (std::size_t i = 0; i < s.covers_frame_ids.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(s.covers_frame_ids[i].value);
    }
    return out + ")";
}

std::string trace_string(const std::vector<ContextElement>& elements) {
    std::string out = "[";
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (i > 0) out += ", ";
        out += element_label(elements[i]);
    }
    return out + "]";
}

std::string trim(std::string_view text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto begin = std::find_if_not(text.begin(), text.end(), is_space);
    auto end = std::find_if_not(text.rbegin(), std::string_view::reverse_iterator(begin), is_space).base();
    return std::string(begin, end);
}

}  // namespace vdm
