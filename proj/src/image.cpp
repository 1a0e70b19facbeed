#include "ils/image.hpp"

#include <string>

namespace ils {

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width)
    : ImageBuffer(height, width, std::vector<std::uint8_t>(height * width * 3, 0)) {}

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width, std::vector<std::uint8_t> samples)
    : height_(height), width_(width), samples_(std::move(samples)) {
    if (height_ == 0 || width_ == 0) {
        throw std::invalid_argument("image dimensions must be at least 1x1");
    }
    if (samples_.size() != height_ * width_ * 3) {
        throw std::invalid_argument("expected " + std::to_string(height_ * width_ * 3) +
                                    " samples, got " + std::to_string(samples_.size()));
    }
}

std::vector<std::uint8_t> ImageBuffer::channel(Channel ch) const {
    std::vector<std::uint8_t> out;
    out.reserve(pixel_count());
    for (std::size_t i = static_cast<std::size_t>(ch); i < samples_.size(); i += 3) {
        out.push_back(samples_[i]);
    }
    return out;
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch("image shapes differ: " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                                "x" + std::to_string(b.width()));
    }
}

}  // namespace ils
