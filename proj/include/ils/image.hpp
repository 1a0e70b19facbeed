#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ils {

enum class Channel : std::size_t { R = 0, G = 1, B = 2 };

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// h x w x 3 samples, row-major with interleaved R, G, B per pixel.
class ImageBuffer {
public:
    /// Zero-filled image. Throws std::invalid_argument if h or w is 0.
    ImageBuffer(std::size_t height, std::size_t width);
    /// Takes ownership of exactly 3*h*w samples; throws otherwise.
    ImageBuffer(std::size_t height, std::size_t width, std::vector<std::uint8_t> samples);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t pixel_count() const { return height_ * width_; }
    std::size_t sample_count() const { return samples_.size(); }

    std::uint8_t& at(std::size_t row, std::size_t col, Channel ch) {
        return samples_[(row * width_ + col) * 3 + static_cast<std::size_t>(ch)];
    }
    std::uint8_t at(std::size_t row, std::size_t col, Channel ch) const {
        return samples_[(row * width_ + col) * 3 + static_cast<std::size_t>(ch)];
    }

    std::span<const std::uint8_t> samples() const { return samples_; }
    std::span<std::uint8_t> samples() { return samples_; }

    /// Copy of one channel, row-major.
    std::vector<std::uint8_t> channel(Channel ch) const;

    bool same_shape(const ImageBuffer& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint8_t> samples_;
};

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace ils
