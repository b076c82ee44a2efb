#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mstm/field/frame.hpp"

namespace mstm {

/// Per-field (min, max) extrema, computed from the training split only.
struct NormStats {
    std::vector<std::pair<double, double>> extrema;  // (min, max) per field

    std::size_t fields() const { return extrema.size(); }

    bool degenerate(std::size_t f) const { return extrema[f].second == extrema[f].first; }
};

inline NormStats compute_norm_stats(std::span<const Sequence> train_sequences) {
    std::size_t n_frames = 0;
    for (const auto& s : train_sequences) n_frames += s.frames.size();
    if (n_frames == 0) throw std::invalid_argument("empty training set");

    const std::size_t f_count = train_sequences.front().frames.front().fields();
    NormStats stats;
    stats.extrema.assign(f_count, {std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()});
    for (const auto& seq : train_sequences) {
        for (const auto& frame : seq.frames) {
            if (frame.fields() != f_count)
                throw std::invalid_argument("field count mismatch across sequences");
            for (std::size_t f = 0; f < f_count; ++f) {
                auto& [lo, hi] = stats.extrema[f];
                for (float v : frame.field(f)) {
                    const double d = v;
                    if (d < lo) lo = d;
                    if (d > hi) hi = d;
                }
            }
        }
    }
    return stats;
}

/// Min-max map to [0,1] on training data. A constant field (max == min)
/// maps to all zeros. Out-of-range inputs are not clipped.
inline FieldFrame normalize(const FieldFrame& frame, const NormStats& stats) {
    if (frame.fields() != stats.fields())
        throw std::invalid_argument("frame/stats field count mismatch");
    FieldFrame out(frame.fields(), frame.height(), frame.width());
    for (std::size_t f = 0; f < frame.fields(); ++f) {
        const auto [lo, hi] = stats.extrema[f];
        auto src = frame.field(f);
        auto dst = out.field(f);
        if (hi == lo) {
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 0.0f;
        } else {
            const double inv = 1.0 / (hi - lo);
            for (std::size_t i = 0; i < src.size(); ++i)
                dst[i] = static_cast<float>((static_cast<double>(src[i]) - lo) * inv);
        }
    }
    return out;
}

/// Inverse of normalize; a degenerate field recovers its stored minimum.
inline FieldFrame denormalize(const FieldFrame& frame, const NormStats& stats) {
    if (frame.fields() != stats.fields())
        throw std::invalid_argument("frame/stats field count mismatch");
    FieldFrame out(frame.fields(), frame.height(), frame.width());
    for (std::size_t f = 0; f < frame.fields(); ++f) {
        const auto [lo, hi] = stats.extrema[f];
        auto src = frame.field(f);
        auto dst = out.field(f);
        if (hi == lo) {
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(lo);
        } else {
            const double span = hi - lo;
            for (std::size_t i = 0; i < src.size(); ++i)
                dst[i] = static_cast<float>(static_cast<double>(src[i]) * span + lo);
        }
    }
    return out;
}

inline void normalize_in_place(Sequence& seq, const NormStats& stats) {
    for (auto& frame : seq.frames) frame = normalize(frame, stats);
}

}  // namespace mstm
