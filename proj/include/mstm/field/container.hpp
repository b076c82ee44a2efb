#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/core/bytes.hpp"
#include "mstm/field/frame.hpp"
#include "mstm/field/norm.hpp"

namespace mstm {

// MSTM container layout (little-endian):
//   magic "MSTM", version byte 0x01, u32 n_sequences,
//   per sequence: u32 T, u32 F, u32 H, u32 W, f32 frame_interval,
//                 u32 n_params, n_params x (u32 key length, key bytes, f64 value),
//                 T*F*H*W f32 values in row-major (t, f, i, j) order.
//
// NormStats sidecar: magic "MSTN", u32 F, then F pairs of f64 (min, max).

enum class ContainerErrorCode {
    open_failed,
    bad_magic,
    bad_version,
    truncated,
    shape_inconsistent,
};

class ContainerError : public std::runtime_error {
  public:
    ContainerError(ContainerErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ContainerErrorCode code() const { return code_; }

  private:
    ContainerErrorCode code_;
};

namespace container_detail {

constexpr char kMagic[4] = {'M', 'S', 'T', 'M'};
constexpr char kStatsMagic[4] = {'M', 'S', 'T', 'N'};
constexpr unsigned char kVersion = 0x01;

// Generous sanity limits so a corrupt header fails cleanly instead of
// attempting a multi-gigabyte allocation.
constexpr std::uint32_t kMaxDim = 1u << 20;

[[noreturn]] inline void fail_truncated(const std::string& path) {
    throw ContainerError(ContainerErrorCode::truncated, "truncated container: " + path);
}

}  // namespace container_detail

inline void write_container(const std::filesystem::path& path,
                            std::span<const Sequence> sequences) {
    using namespace container_detail;
    for (const auto& seq : sequences) seq.validate();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ContainerError(ContainerErrorCode::open_failed,
                                  "cannot open for writing: " + path.string());
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    put_u32(os, static_cast<std::uint32_t>(sequences.size()));
    for (const auto& seq : sequences) {
        const auto& first = seq.frames.front();
        put_u32(os, static_cast<std::uint32_t>(seq.frames.size()));
        put_u32(os, static_cast<std::uint32_t>(first.fields()));
        put_u32(os, static_cast<std::uint32_t>(first.height()));
        put_u32(os, static_cast<std::uint32_t>(first.width()));
        put_f32(os, seq.frame_interval);
        put_u32(os, static_cast<std::uint32_t>(seq.params.size()));
        for (const auto& [key, value] : seq.params) {
            put_u32(os, static_cast<std::uint32_t>(key.size()));
            os.write(key.data(), static_cast<std::streamsize>(key.size()));
            put_f64(os, value);
        }
        for (const auto& frame : seq.frames)
            put_f32_block(os, frame.values.data(), frame.values.size());
    }
    if (!os) throw ContainerError(ContainerErrorCode::open_failed,
                                  "write failed: " + path.string());
}

inline std::vector<Sequence> read_container(const std::filesystem::path& path) {
    using namespace container_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContainerError(ContainerErrorCode::open_failed,
                                  "cannot open for reading: " + path.string());
    char magic[4];
    if (!is.read(magic, 4)) fail_truncated(path.string());
    if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
        throw ContainerError(ContainerErrorCode::bad_magic, "bad magic in " + path.string());
    const int version = is.get();
    if (version == std::char_traits<char>::eof()) fail_truncated(path.string());
    if (version != kVersion)
        throw ContainerError(ContainerErrorCode::bad_version,
                             "unsupported container version in " + path.string());

    std::uint32_t n_sequences;
    if (!get_u32(is, n_sequences)) fail_truncated(path.string());

    std::vector<Sequence> out;
    out.reserve(n_sequences);
    for (std::uint32_t s = 0; s < n_sequences; ++s) {
        std::uint32_t t, f, h, w, n_params;
        float interval;
        if (!get_u32(is, t) || !get_u32(is, f) || !get_u32(is, h) || !get_u32(is, w) ||
            !get_f32(is, interval) || !get_u32(is, n_params))
            fail_truncated(path.string());
        if (t == 0 || f == 0 || h == 0 || w == 0 || t > kMaxDim || f > kMaxDim || h > kMaxDim ||
            w > kMaxDim)
            throw ContainerError(ContainerErrorCode::shape_inconsistent,
                                 "implausible sequence shape in " + path.string());
        Sequence seq;
        seq.frame_interval = interval;
        for (std::uint32_t p = 0; p < n_params; ++p) {
            std::uint32_t key_len;
            if (!get_u32(is, key_len)) fail_truncated(path.string());
            if (key_len > kMaxDim)
                throw ContainerError(ContainerErrorCode::shape_inconsistent,
                                     "implausible metadata key length in " + path.string());
            std::string key(key_len, '\0');
            if (key_len && !is.read(key.data(), key_len)) fail_truncated(path.string());
            double value;
            if (!get_f64(is, value)) fail_truncated(path.string());
            seq.params.emplace(std::move(key), value);
        }
        seq.frames.reserve(t);
        for (std::uint32_t k = 0; k < t; ++k) {
            FieldFrame frame(f, h, w);
            if (!get_f32_block(is, frame.values.data(), frame.values.size()))
                fail_truncated(path.string());
            seq.frames.push_back(std::move(frame));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

inline void write_norm_stats(const std::filesystem::path& path, const NormStats& stats) {
    using namespace container_detail;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ContainerError(ContainerErrorCode::open_failed,
                                  "cannot open for writing: " + path.string());
    os.write(kStatsMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(stats.extrema.size()));
    for (const auto& [lo, hi] : stats.extrema) {
        put_f64(os, lo);
        put_f64(os, hi);
    }
}

inline NormStats read_norm_stats(const std::filesystem::path& path) {
    using namespace container_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContainerError(ContainerErrorCode::open_failed,
                                  "cannot open for reading: " + path.string());
    char magic[4];
    if (!is.read(magic, 4)) fail_truncated(path.string());
    if (std::string_view(magic, 4) != std::string_view(kStatsMagic, 4))
        throw ContainerError(ContainerErrorCode::bad_magic, "bad magic in " + path.string());
    std::uint32_t f;
    if (!get_u32(is, f)) fail_truncated(path.string());
    if (f > kMaxDim)
        throw ContainerError(ContainerErrorCode::shape_inconsistent,
                             "implausible field count in " + path.string());
    NormStats stats;
    stats.extrema.resize(f);
    for (auto& [lo, hi] : stats.extrema)
        if (!get_f64(is, lo) || !get_f64(is, hi)) fail_truncated(path.string());
    return stats;
}

/// Fingerprint of a file's full contents, used to tie checkpoints to the
/// normalization stats they were trained with.
inline std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContainerError(ContainerErrorCode::open_failed,
                                  "cannot open for reading: " + path.string());
    Crc32 crc;
    char buf[1 << 16];
    while (is.read(buf, sizeof buf) || is.gcount() > 0)
        crc.update(buf, static_cast<std::size_t>(is.gcount()));
    return crc.value();
}

}  // namespace mstm
