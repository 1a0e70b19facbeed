#include "ils/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>

#include "ils/cipher.hpp"

namespace ils {

Histogram histogram(std::span<const std::uint8_t> values) {
    Histogram h{};
    for (std::uint8_t v : values) ++h[v];
    return h;
}

Histogram histogram(const ImageBuffer& img, Channel ch) { return histogram(img.channel(ch)); }

double shannon_entropy(std::span<const std::uint8_t> values) {
    if (values.empty()) throw std::invalid_argument("entropy of an empty channel is undefined");
    const Histogram h = histogram(values);
    const double total = static_cast<double>(values.size());
    double entropy = 0.0;
    for (std::size_t count : h) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / total;
        entropy -= p * std::log2(p);
    }
    return entropy;
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::Horizontal: return "h";
        case Direction::Vertical: return "v";
        case Direction::Diagonal: return "d";
    }
    return "?";
}

namespace {

struct Offset {
    std::size_t drow;
    std::size_t dcol;
};

Offset offset_of(Direction dir) {
    switch (dir) {
        case Direction::Horizontal: return {0, 1};
        case Direction::Vertical: return {1, 0};
        case Direction::Diagonal: return {1, 1};
    }
    return {0, 1};
}

}  // namespace

CorrelationSample sample_adjacent_pairs(const ImageBuffer& img, Channel ch, Direction dir,
                                        std::size_t n_samples, std::uint64_t rng_seed) {
    const Offset off = offset_of(dir);
    if (img.height() <= off.drow || img.width() <= off.dcol) {
        throw std::invalid_argument("image too small for " + to_string(dir) + " neighbours");
    }
    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<std::size_t> rows(0, img.height() - 1 - off.drow);
    std::uniform_int_distribution<std::size_t> cols(0, img.width() - 1 - off.dcol);

    CorrelationSample sample{dir, {}};
    sample.pairs.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t row = rows(rng);
        const std::size_t col = cols(rng);
        sample.pairs.emplace_back(img.at(row, col, ch), img.at(row + off.drow, col + off.dcol, ch));
    }
    return sample;
}

CorrelationSample all_adjacent_pairs(const ImageBuffer& img, Channel ch, Direction dir) {
    const Offset off = offset_of(dir);
    if (img.height() <= off.drow || img.width() <= off.dcol) {
        throw std::invalid_argument("image too small for " + to_string(dir) + " neighbours");
    }
    CorrelationSample sample{dir, {}};
    for (std::size_t row = 0; row + off.drow < img.height(); ++row) {
        for (std::size_t col = 0; col + off.dcol < img.width(); ++col) {
            sample.pairs.emplace_back(img.at(row, col, ch), img.at(row + off.drow, col + off.dcol, ch));
        }
    }
    return sample;
}

double pearson(const CorrelationSample& sample) {
    if (sample.pairs.empty()) throw UndefinedCorrelation("no pairs to correlate");
    const double n = static_cast<double>(sample.pairs.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (const auto& [a, b] : sample.pairs) {
        mean_a += a;
        mean_b += b;
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (const auto& [a, b] : sample.pairs) {
        const double da = a - mean_a;
        const double db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) {
        throw UndefinedCorrelation("correlation undefined: a marginal has zero variance");
    }
    return cov / std::sqrt(var_a * var_b);
}

double adjacent_correlation(const ImageBuffer& img, Channel ch, Direction dir, std::size_t n_samples,
                            std::uint64_t rng_seed) {
    return pearson(sample_adjacent_pairs(img, ch, dir, n_samples, rng_seed));
}

double npcr(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b);
    const auto sa = a.samples();
    const auto sb = b.samples();
    std::size_t changed = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) changed += sa[i] != sb[i] ? 1 : 0;
    return 100.0 * static_cast<double>(changed) / static_cast<double>(sa.size());
}

double uaci(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b);
    const auto sa = a.samples();
    const auto sb = b.samples();
    // Integer accumulation keeps the result exact up to the final division.
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += static_cast<std::uint64_t>(std::abs(sa[i] - sb[i]));
    return 100.0 * static_cast<double>(total) / (255.0 * static_cast<double>(sa.size()));
}

ImageBuffer diff_image(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b);
    ImageBuffer out(a.height(), a.width());
    const auto sa = a.samples();
    const auto sb = b.samples();
    auto so = out.samples();
    for (std::size_t i = 0; i < sa.size(); ++i) so[i] = static_cast<std::uint8_t>(std::abs(sa[i] - sb[i]));
    return out;
}

DifferentialResult differential_test(const ImageBuffer& plain, std::size_t row, std::size_t col,
                                     std::array<std::uint8_t, 3> new_value, KeyMode mode) {
    if (row >= plain.height() || col >= plain.width()) {
        throw std::out_of_range("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                                ") is outside the image");
    }
    ImageBuffer modified = plain;
    for (Channel ch : kAllChannels) modified.at(row, col, ch) = new_value[static_cast<std::size_t>(ch)];

    const KeyMaterial keys = derive_keys(plain);
    const ImageBuffer c1 = encrypt(plain, keys);
    const ImageBuffer c2 = encrypt(modified, mode == KeyMode::PlaintextKeyed ? derive_keys(modified) : keys);
    return {npcr(c1, c2), uaci(c1, c2)};
}

MetricsReport image_statistics(const ImageBuffer& img, std::size_t n_samples, std::uint64_t rng_seed) {
    MetricsReport report;
    for (Channel ch : kAllChannels) {
        const auto c = static_cast<std::size_t>(ch);
        const auto values = img.channel(ch);
        report.entropy[c] = shannon_entropy(values);
        report.histogram[c] = histogram(values);
        for (std::size_t d = 0; d < kAllDirections.size(); ++d) {
            report.correlation[d][c] = adjacent_correlation(img, ch, kAllDirections[d], n_samples, rng_seed);
        }
    }
    return report;
}

namespace {
constexpr const char* kChannelNames[3] = {"r", "g", "b"};
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json j;
    for (std::size_t c = 0; c < 3; ++c) j["entropy"][kChannelNames[c]] = report.entropy[c];
    for (std::size_t d = 0; d < 3; ++d) {
        for (std::size_t c = 0; c < 3; ++c) {
            j["correlation"][to_string(kAllDirections[d])][kChannelNames[c]] = report.correlation[d][c];
        }
    }
    j["npcr"] = report.npcr;
    j["uaci"] = report.uaci;
    return j;
}

void write_histogram_csv(std::ostream& out, const MetricsReport& report) {
    out << "channel,bin,count\n";
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t bin = 0; bin < 256; ++bin) {
            out << kChannelNames[c] << ',' << bin << ',' << report.histogram[c][bin] << '\n';
        }
    }
}

}  // namespace ils
