#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

// Self-contained hashing and PRNG primitives. The mock providers and the
// index checksum depend on these being bit-identical on every platform,
// which std::hash and std::shuffle do not guarantee.

namespace grg::detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Uniform double in [0, 1) with a 53-bit mantissa.
inline double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Deterministic counter-free PRNG over splitmix64.
class Pcg {
public:
    explicit Pcg(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // [0, 1)
    double next_unit() { return unit_double(next_u64()); }

    // [-1, 1)
    double next_signed_unit() { return 2.0 * next_unit() - 1.0; }

    // [0, bound), bound > 0. Modulo bias is irrelevant for bounds far
    // below 2^64 and the result is stable across platforms.
    std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

private:
    std::uint64_t state_;
};

// CRC-32 (IEEE 802.3 polynomial, reflected).
inline std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t crc = 0) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const unsigned char*>(data);
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

} // namespace grg::detail
