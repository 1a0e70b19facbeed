#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "ils/image.hpp"

namespace ils {

class UndefinedCorrelation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class Direction { Horizontal, Vertical, Diagonal };

inline constexpr std::array<Direction, 3> kAllDirections = {Direction::Horizontal, Direction::Vertical,
                                                            Direction::Diagonal};
inline constexpr std::array<Channel, 3> kAllChannels = {Channel::R, Channel::G, Channel::B};

inline constexpr std::size_t kDefaultCorrelationSamples = 5000;

using Histogram = std::array<std::size_t, 256>;

Histogram histogram(std::span<const std::uint8_t> values);
Histogram histogram(const ImageBuffer& img, Channel ch);

/// Shannon entropy in bits of the 256-bin empirical distribution.
/// Throws std::invalid_argument on empty input.
double shannon_entropy(std::span<const std::uint8_t> values);

struct CorrelationSample {
    Direction direction = Direction::Horizontal;
    std::vector<std::pair<std::uint8_t, std::uint8_t>> pairs;

    std::size_t count() const { return pairs.size(); }
};

/// Draws n_samples uniformly random in-bounds (pixel, neighbour) pairs.
/// Throws std::invalid_argument if the image has no pair in that direction.
CorrelationSample sample_adjacent_pairs(const ImageBuffer& img, Channel ch, Direction dir,
                                        std::size_t n_samples, std::uint64_t rng_seed);

/// Every adjacent pair in the given direction, in row-major order.
CorrelationSample all_adjacent_pairs(const ImageBuffer& img, Channel ch, Direction dir);

/// Pearson coefficient; throws UndefinedCorrelation when a marginal variance is 0.
double pearson(const CorrelationSample& sample);

double adjacent_correlation(const ImageBuffer& img, Channel ch, Direction dir,
                            std::size_t n_samples = kDefaultCorrelationSamples,
                            std::uint64_t rng_seed = 1);

/// Percentages over all 3*h*w samples; throw DimensionMismatch on shape mismatch.
double npcr(const ImageBuffer& a, const ImageBuffer& b);
double uaci(const ImageBuffer& a, const ImageBuffer& b);

ImageBuffer diff_image(const ImageBuffer& a, const ImageBuffer& b);

enum class KeyMode { PlaintextKeyed, FixedKey };

struct DifferentialResult {
    double npcr = 0.0;
    double uaci = 0.0;
};

/// Encrypts `plain` and a copy with one pixel replaced, each under its own
/// derived keys (FixedKey reuses the keys of `plain`).
/// Throws std::out_of_range if the pixel is outside the image.
DifferentialResult differential_test(const ImageBuffer& plain, std::size_t row, std::size_t col,
                                     std::array<std::uint8_t, 3> new_value,
                                     KeyMode mode = KeyMode::PlaintextKeyed);

struct MetricsReport {
    std::array<double, 3> entropy{};
    std::array<std::array<double, 3>, 3> correlation{};  // [direction][channel]
    double npcr = 0.0;
    double uaci = 0.0;
    std::array<Histogram, 3> histogram{};
};

/// Entropy, correlation and histograms of a single image; npcr/uaci are left at 0.
MetricsReport image_statistics(const ImageBuffer& img,
                               std::size_t n_samples = kDefaultCorrelationSamples,
                               std::uint64_t rng_seed = 1);

std::string to_string(Direction d);

/// Keys `entropy:{r,g,b}`, `correlation:{h,v,d}:{r,g,b}`, `npcr`, `uaci`.
nlohmann::json to_json(const MetricsReport& report);

/// Rows `channel,bin,count`, 768 of them.
void write_histogram_csv(std::ostream& out, const MetricsReport& report);

}  // namespace ils
