#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ils/chaos.hpp"
#include "ils/image.hpp"

namespace ils {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::span<const std::uint8_t> bytes);

class KeyFormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Everything derived from one 256-bit hash. t, k and k_norm are 0-indexed
/// (t[0] is the first 16-bit segment).
struct KeyMaterial {
    Sha256Digest hash{};
    std::array<std::uint16_t, 18> t{};
    std::array<std::uint16_t, 6> k{};
    std::array<double, 6> k_norm{};
    double alpha = 0.0;
    double r = 0.0;
    double mu = 0.0;
    double x0 = 0.0;
    double y0 = 0.0;
    double z0 = 0.0;

    /// Map parameters with the fixed coupling coefficient.
    SystemParams params() const;
    SystemState seed() const { return {x0, y0, z0}; }
    std::string hex() const;
};

/// Runs the hash-to-parameter schedule on a raw digest.
KeyMaterial keys_from_hash(const Sha256Digest& hash);

/// Parses 64 hex characters; whitespace is ignored and case does not matter.
/// Throws KeyFormatError on anything else.
KeyMaterial keys_from_hex(std::string_view text);

/// SHA-256 over the raw interleaved samples, then keys_from_hash.
KeyMaterial derive_keys(const ImageBuffer& plain);

/// Cross-channel nibble routing: (R, G, B) -> (G_lo|B_hi, B_lo|R_hi, R_lo|G_hi).
ImageBuffer bit_mix(const ImageBuffer& img);
ImageBuffer bit_unmix(const ImageBuffer& img);

struct KeystreamBundle {
    std::size_t n = 0;                  // pixels; every vector has 3n entries
    std::vector<double> U;              // X || Y || Z
    std::vector<std::size_t> W;         // 0-based stable sort order of U
    std::vector<std::uint8_t> V;        // floor(10000 U) & 255
};

/// Builds W and V from an explicit sequence whose length must be a positive
/// multiple of 3.
KeystreamBundle keystream_from_sequence(std::vector<double> U);

/// One orbit of n samples after the default transient, coordinates concatenated.
KeystreamBundle make_keystream(const KeyMaterial& keys, std::size_t n);

/// Permutation-diffusion chain over a flattened bit-mixed image.
std::vector<std::uint8_t> diffuse(std::span<const std::uint8_t> flat, const KeystreamBundle& ks);
/// Inverse of diffuse.
std::vector<std::uint8_t> undiffuse(std::span<const std::uint8_t> flat, const KeystreamBundle& ks);

ImageBuffer encrypt(const ImageBuffer& plain, const KeystreamBundle& ks);
ImageBuffer encrypt(const ImageBuffer& plain, const KeyMaterial& keys);
/// Throws DimensionMismatch when the keystream length does not match the image.
ImageBuffer decrypt(const ImageBuffer& cipher, const KeystreamBundle& ks);
ImageBuffer decrypt(const ImageBuffer& cipher, const KeyMaterial& keys);

}  // namespace ils
