#include "ils/cipher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <openssl/evp.h>

namespace ils {

namespace {
constexpr double kTwo16 = 65536.0;
}

Sha256Digest sha256(std::span<const std::uint8_t> bytes) {
    Sha256Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    return out;
}

SystemParams KeyMaterial::params() const { return SystemParams(alpha, r, mu); }

std::string KeyMaterial::hex() const {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : hash) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0F]);
    }
    return out;
}

KeyMaterial keys_from_hash(const Sha256Digest& hash) {
    KeyMaterial km;
    km.hash = hash;
    for (std::size_t j = 0; j < 16; ++j) {
        km.t[j] = static_cast<std::uint16_t>((hash[2 * j] << 8) | hash[2 * j + 1]);
    }
    km.t[16] = static_cast<std::uint16_t>((km.t[0] & km.t[1]) ^ km.t[2]);
    km.t[17] = static_cast<std::uint16_t>((km.t[3] & km.t[4]) ^ km.t[5]);
    for (std::size_t i = 0; i < 6; ++i) {
        const std::uint32_t sum = std::uint32_t{km.t[3 * i]} + km.t[3 * i + 1] + km.t[3 * i + 2];
        km.k[i] = static_cast<std::uint16_t>(sum % 65536u);
        km.k_norm[i] = static_cast<double>(km.k[i]) / kTwo16;
    }
    km.alpha = 3.0 + 3.0 * km.k_norm[0];
    km.r = 3.7 + 0.3 * km.k_norm[1];
    km.mu = 5.0 + 5.0 * km.k_norm[2];
    km.x0 = km.k_norm[3];
    km.y0 = km.k_norm[4];
    km.z0 = km.k_norm[5];
    return km;
}

KeyMaterial keys_from_hex(std::string_view text) {
    Sha256Digest hash{};
    std::size_t nibbles = 0;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        const int c = std::tolower(static_cast<unsigned char>(ch));
        int v;
        if (c >= '0' && c <= '9') {
            v = c - '0';
        } else if (c >= 'a' && c <= 'f') {
            v = c - 'a' + 10;
        } else {
            throw KeyFormatError(std::string("invalid hex character '") + ch + "' in key");
        }
        if (nibbles >= 64) throw KeyFormatError("key has more than 64 hex characters");
        hash[nibbles / 2] = static_cast<std::uint8_t>(hash[nibbles / 2] | (nibbles % 2 == 0 ? v << 4 : v));
        ++nibbles;
    }
    if (nibbles != 64) {
        throw KeyFormatError("key must have exactly 64 hex characters, got " + std::to_string(nibbles));
    }
    return keys_from_hash(hash);
}

KeyMaterial derive_keys(const ImageBuffer& plain) { return keys_from_hash(sha256(plain.samples())); }

ImageBuffer bit_mix(const ImageBuffer& img) {
    ImageBuffer out(img.height(), img.width());
    auto src = img.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        const std::uint8_t r = src[i], g = src[i + 1], b = src[i + 2];
        dst[i] = static_cast<std::uint8_t>(((g & 0x0F) << 4) | (b >> 4));
        dst[i + 1] = static_cast<std::uint8_t>(((b & 0x0F) << 4) | (r >> 4));
        dst[i + 2] = static_cast<std::uint8_t>(((r & 0x0F) << 4) | (g >> 4));
    }
    return out;
}

ImageBuffer bit_unmix(const ImageBuffer& img) {
    ImageBuffer out(img.height(), img.width());
    auto src = img.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        const std::uint8_t re = src[i], ge = src[i + 1], be = src[i + 2];
        // R_hi sits in the low nibble of G_en, R_lo in the high nibble of B_en, etc.
        dst[i] = static_cast<std::uint8_t>(((ge & 0x0F) << 4) | (be >> 4));
        dst[i + 1] = static_cast<std::uint8_t>(((be & 0x0F) << 4) | (re >> 4));
        dst[i + 2] = static_cast<std::uint8_t>(((re & 0x0F) << 4) | (ge >> 4));
    }
    return out;
}

KeystreamBundle keystream_from_sequence(std::vector<double> U) {
    if (U.empty() || U.size() % 3 != 0) {
        throw std::invalid_argument("keystream length must be a positive multiple of 3");
    }
    KeystreamBundle ks;
    ks.n = U.size() / 3;
    ks.W.resize(U.size());
    std::iota(ks.W.begin(), ks.W.end(), std::size_t{0});
    std::stable_sort(ks.W.begin(), ks.W.end(), [&U](std::size_t a, std::size_t b) { return U[a] < U[b]; });
    ks.V.resize(U.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
        ks.V[i] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(std::floor(10000.0 * U[i])) & 0xFFu);
    }
    ks.U = std::move(U);
    return ks;
}

KeystreamBundle make_keystream(const KeyMaterial& keys, std::size_t n) {
    if (n == 0) throw std::invalid_argument("keystream needs at least one pixel");
    const Orbit orbit = generate_orbit(keys.seed(), keys.params(), kDefaultTransient, n);
    std::vector<double> U(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        U[i] = orbit.states[i].x;
        U[n + i] = orbit.states[i].y;
        U[2 * n + i] = orbit.states[i].z;
    }
    return keystream_from_sequence(std::move(U));
}

namespace {

void require_length(std::size_t len, const KeystreamBundle& ks) {
    if (len != 3 * ks.n || ks.W.size() != len || ks.V.size() != len) {
        throw DimensionMismatch("keystream covers " + std::to_string(3 * ks.n) + " samples, data has " +
                                std::to_string(len));
    }
}

}  // namespace

std::vector<std::uint8_t> diffuse(std::span<const std::uint8_t> flat, const KeystreamBundle& ks) {
    require_length(flat.size(), ks);
    const std::size_t m = flat.size();
    const auto& W = ks.W;
    const auto& V = ks.V;
    const std::uint8_t last = flat[W[m - 1]];

    std::vector<std::uint8_t> d(m);
    d[0] = static_cast<std::uint8_t>(flat[W[0]] ^ last ^ flat[W[m - 2]] ^ V[0]);
    d[1] = static_cast<std::uint8_t>(flat[W[1]] ^ d[0] ^ last ^ V[1]);
    for (std::size_t i = 2; i < m; ++i) {
        d[i] = static_cast<std::uint8_t>(flat[W[i]] ^ d[i - 1] ^ d[i - 2] ^ V[i]);
    }
    return d;
}

std::vector<std::uint8_t> undiffuse(std::span<const std::uint8_t> flat, const KeystreamBundle& ks) {
    require_length(flat.size(), ks);
    const std::size_t m = flat.size();
    const auto& W = ks.W;
    const auto& V = ks.V;
    const auto& d = flat;

    std::vector<std::uint8_t> r(m);
    for (std::size_t i = m - 1; i >= 2; --i) {
        r[W[i]] = static_cast<std::uint8_t>(d[i] ^ d[i - 1] ^ d[i - 2] ^ V[i]);
    }
    const std::uint8_t last = r[W[m - 1]];
    r[W[1]] = static_cast<std::uint8_t>(d[1] ^ d[0] ^ last ^ V[1]);
    r[W[0]] = static_cast<std::uint8_t>(d[0] ^ last ^ r[W[m - 2]] ^ V[0]);
    return r;
}

ImageBuffer encrypt(const ImageBuffer& plain, const KeystreamBundle& ks) {
    const ImageBuffer mixed = bit_mix(plain);
    return {plain.height(), plain.width(), diffuse(mixed.samples(), ks)};
}

ImageBuffer encrypt(const ImageBuffer& plain, const KeyMaterial& keys) {
    return encrypt(plain, make_keystream(keys, plain.pixel_count()));
}

ImageBuffer decrypt(const ImageBuffer& cipher, const KeystreamBundle& ks) {
    const ImageBuffer mixed(cipher.height(), cipher.width(), undiffuse(cipher.samples(), ks));
    return bit_unmix(mixed);
}

ImageBuffer decrypt(const ImageBuffer& cipher, const KeyMaterial& keys) {
    return decrypt(cipher, make_keystream(keys, cipher.pixel_count()));
}

}  // namespace ils
