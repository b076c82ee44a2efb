#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mstm/field/frame.hpp"

namespace mstm {

/// One teacher-forcing sample: `window` consecutive input frames and the
/// frame that follows them, referenced in place.
struct WindowSample {
    std::span<const FieldFrame> inputs;
    const FieldFrame* target;
};

inline std::vector<WindowSample> window_samples(const Sequence& seq, std::size_t window = 5) {
    if (window == 0) throw std::invalid_argument("window must be positive");
    if (seq.length() < window + 1)
        throw std::invalid_argument("sequence too short for the requested window");
    std::vector<WindowSample> out;
    out.reserve(seq.length() - window);
    for (std::size_t k = 0; k + window < seq.length(); ++k) {
        out.push_back({std::span<const FieldFrame>(seq.frames.data() + k, window),
                       &seq.frames[k + window]});
    }
    return out;
}

}  // namespace mstm
