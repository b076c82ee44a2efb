#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/core/tensor.hpp"

namespace mstm {

// Canonical field order. Materials sits at index 3; the mask-building code
// in metrics/ depends on that slot.
enum class Field : std::size_t {
    density = 0,
    velocity_x = 1,
    velocity_y = 2,
    materials = 3,
    pressure = 4,
    energy = 5,
    temperature = 6,
};

inline constexpr std::size_t kNumFields = 7;

inline constexpr const char* kFieldNames[kNumFields] = {
    "density", "velocity_x", "velocity_y", "materials", "pressure", "energy", "temperature",
};

/// One time snapshot: F physical fields on an H x W grid, stored (f, i, j).
struct FieldFrame {
    TensorF values;

    FieldFrame() = default;
    FieldFrame(std::size_t f, std::size_t h, std::size_t w) : values({f, h, w}) {}
    explicit FieldFrame(TensorF v) : values(std::move(v)) {
        if (values.rank() != 3) throw std::invalid_argument("FieldFrame expects a rank-3 tensor");
    }

    std::size_t fields() const { return values.dim(0); }
    std::size_t height() const { return values.dim(1); }
    std::size_t width() const { return values.dim(2); }

    float& at(std::size_t f, std::size_t i, std::size_t j) { return values.at(f, i, j); }
    float at(std::size_t f, std::size_t i, std::size_t j) const { return values.at(f, i, j); }

    std::span<float> field(std::size_t f) {
        return {values.data() + f * height() * width(), height() * width()};
    }
    std::span<const float> field(std::size_t f) const {
        return {values.data() + f * height() * width(), height() * width()};
    }
    std::span<float> field(Field f) { return field(static_cast<std::size_t>(f)); }
    std::span<const float> field(Field f) const { return field(static_cast<std::size_t>(f)); }

    bool same_shape(const FieldFrame& other) const { return values.same_shape(other.values); }
};

/// Ordered frames plus the geometry/loading parameters that produced them.
struct Sequence {
    std::vector<FieldFrame> frames;
    float frame_interval = 0.0f;             // time between recorded frames (us)
    std::map<std::string, double> params;    // geometry metadata, sorted for stable io

    std::size_t length() const { return frames.size(); }

    void validate() const {
        if (frames.empty()) throw std::invalid_argument("sequence has no frames");
        for (const auto& fr : frames) {
            if (!fr.same_shape(frames.front()))
                throw std::invalid_argument("sequence frames disagree on shape");
            if (!fr.values.all_finite())
                throw std::invalid_argument("sequence contains non-finite values");
        }
    }
};

}  // namespace mstm
