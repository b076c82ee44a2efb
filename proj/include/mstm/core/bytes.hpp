#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mstm {

// All file formats in this project are little-endian. The helpers below
// serialize through byte shifts so they behave the same on any host.

inline void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                   static_cast<unsigned char>((v >> 8) & 0xff),
                                   static_cast<unsigned char>((v >> 16) & 0xff),
                                   static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v & 0xffffffffu));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
        (std::uint32_t(b[3]) << 24);
    return true;
}

inline bool get_u64(std::istream& is, std::uint64_t& v) {
    std::uint32_t lo, hi;
    if (!get_u32(is, lo) || !get_u32(is, hi)) return false;
    v = std::uint64_t(lo) | (std::uint64_t(hi) << 32);
    return true;
}

inline bool get_f32(std::istream& is, float& v) {
    std::uint32_t bits;
    if (!get_u32(is, bits)) return false;
    std::memcpy(&v, &bits, 4);
    return true;
}

inline bool get_f64(std::istream& is, double& v) {
    std::uint64_t bits;
    if (!get_u64(is, bits)) return false;
    std::memcpy(&v, &bits, 8);
    return true;
}

// Bulk f32 payload io. On little-endian hosts this is a straight memcpy.
inline void put_f32_block(std::ostream& os, const float* src, std::size_t n) {
    static_assert(sizeof(float) == 4);
    std::uint32_t probe = 1;
    if (*reinterpret_cast<const unsigned char*>(&probe) == 1) {
        os.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(4 * n));
    } else {
        for (std::size_t i = 0; i < n; ++i) put_f32(os, src[i]);
    }
}

inline bool get_f32_block(std::istream& is, float* dst, std::size_t n) {
    std::uint32_t probe = 1;
    if (*reinterpret_cast<const unsigned char*>(&probe) == 1) {
        return static_cast<bool>(
            is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(4 * n)));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!get_f32(is, dst[i])) return false;
    return true;
}

/// CRC-32 (IEEE 802.3, reflected), the same polynomial zlib and PNG use.
class Crc32 {
  public:
    Crc32() { reset(); }

    void reset() { crc_ = 0xffffffffu; }

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        std::uint32_t c = crc_;
        for (std::size_t i = 0; i < n; ++i) c = table()[(c ^ p[i]) & 0xff] ^ (c >> 8);
        crc_ = c;
    }

    std::uint32_t value() const { return crc_ ^ 0xffffffffu; }

    static std::uint32_t of(const void* data, std::size_t n) {
        Crc32 c;
        c.update(data, n);
        return c.value();
    }

  private:
    static const std::uint32_t* table() {
        static const auto tbl = [] {
            std::array<std::uint32_t, 256> t{};
            for (std::uint32_t i = 0; i < 256; ++i) {
                std::uint32_t c = i;
                for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
                t[i] = c;
            }
            return t;
        }();
        return tbl.data();
    }

    std::uint32_t crc_;
};

/// FNV-1a 64-bit, used for artifact fingerprints in manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace mstm
