#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mstm/core/rng.hpp"
#include "mstm/core/tensor.hpp"
#include "mstm/nn/config.hpp"

namespace mstm::nn {

/// One stacked-LSTM layer. Gate rows are ordered (input, forget, cell,
/// output), so w_ih has shape (4h, in) with gate g occupying rows
/// [g*h, (g+1)*h).
template <typename T>
struct LstmLayerParams {
    Tensor<T> w_ih;  // (4h, in)
    Tensor<T> w_hh;  // (4h, h)
    Tensor<T> b_ih;  // (4h)
    Tensor<T> b_hh;  // (4h)
};

template <typename T>
struct ModelParams {
    ModelConfig cfg;
    Tensor<T> conv1_w;  // (c1, F, 3, 3); contiguous rows of F*9 for the GEMM path
    Tensor<T> conv1_b;  // (c1)
    Tensor<T> conv2_w;  // (c2, c1, 3, 3)
    Tensor<T> conv2_b;  // (c2)
    std::vector<LstmLayerParams<T>> lstm;
    Tensor<T> dense_w;  // (F*H*W, h)
    Tensor<T> dense_b;  // (F*H*W)

    struct View {
        std::string name;
        Tensor<T>* tensor;
    };
    struct ConstView {
        std::string name;
        const Tensor<T>* tensor;
    };

    /// Stable iteration order used by the optimizer, checkpoints, and the
    /// gradient checker.
    std::vector<View> views() {
        std::vector<View> v{{"conv1.w", &conv1_w}, {"conv1.b", &conv1_b},
                            {"conv2.w", &conv2_w}, {"conv2.b", &conv2_b}};
        for (std::size_t l = 0; l < lstm.size(); ++l) {
            const std::string p = "lstm" + std::to_string(l) + ".";
            v.push_back({p + "w_ih", &lstm[l].w_ih});
            v.push_back({p + "w_hh", &lstm[l].w_hh});
            v.push_back({p + "b_ih", &lstm[l].b_ih});
            v.push_back({p + "b_hh", &lstm[l].b_hh});
        }
        v.push_back({"dense.w", &dense_w});
        v.push_back({"dense.b", &dense_b});
        return v;
    }
    std::vector<ConstView> views() const {
        auto* self = const_cast<ModelParams*>(this);
        std::vector<ConstView> out;
        for (auto& v : self->views()) out.push_back({v.name, v.tensor});
        return out;
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& v : views()) n += v.tensor->size();
        return n;
    }

    bool all_finite() const {
        for (const auto& v : views())
            if (!v.tensor->all_finite()) return false;
        return true;
    }

    /// Same shapes, all values zero; gradient and moment buffers start here.
    static ModelParams zeros_like(const ModelConfig& cfg) {
        cfg.validate();
        ModelParams p;
        p.cfg = cfg;
        const std::size_t k = cfg.kernel;
        p.conv1_w = Tensor<T>({cfg.conv1_out, cfg.fields, k, k});
        p.conv1_b = Tensor<T>({cfg.conv1_out});
        p.conv2_w = Tensor<T>({cfg.conv2_out, cfg.conv1_out, k, k});
        p.conv2_b = Tensor<T>({cfg.conv2_out});
        p.lstm.resize(cfg.lstm_layers);
        for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
            const std::size_t in = cfg.lstm_input(l);
            const std::size_t h = cfg.lstm_hidden;
            p.lstm[l].w_ih = Tensor<T>({4 * h, in});
            p.lstm[l].w_hh = Tensor<T>({4 * h, h});
            p.lstm[l].b_ih = Tensor<T>({4 * h});
            p.lstm[l].b_hh = Tensor<T>({4 * h});
        }
        p.dense_w = Tensor<T>({cfg.output_size(), cfg.lstm_hidden});
        p.dense_b = Tensor<T>({cfg.output_size()});
        return p;
    }

    void scale(T factor) {
        for (auto& v : views())
            for (auto& x : v.tensor->values()) x *= factor;
    }

    void accumulate(const ModelParams& other) {
        auto mine = views();
        auto theirs = other.views();
        for (std::size_t i = 0; i < mine.size(); ++i) {
            T* dst = mine[i].tensor->data();
            const T* src = theirs[i].tensor->data();
            const std::size_t n = mine[i].tensor->size();
            for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
        }
    }

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out = ModelParams<U>::zeros_like(cfg);
        auto mine = views();
        auto theirs = out.views();
        for (std::size_t i = 0; i < mine.size(); ++i) {
            const T* src = mine[i].tensor->data();
            U* dst = theirs[i].tensor->data();
            for (std::size_t j = 0; j < mine[i].tensor->size(); ++j)
                dst[j] = static_cast<U>(src[j]);
        }
        return out;
    }
};

namespace params_detail {

/// fan-in of each tensor for the uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// initialization; biases inherit their layer's weight fan-in.
inline std::size_t fan_in_of(const ModelConfig& cfg, const std::string& name) {
    const std::size_t k2 = cfg.kernel * cfg.kernel;
    if (name.rfind("conv1", 0) == 0) return cfg.fields * k2;
    if (name.rfind("conv2", 0) == 0) return cfg.conv1_out * k2;
    if (name.rfind("lstm", 0) == 0) {
        const std::size_t layer = static_cast<std::size_t>(std::stoul(name.substr(4)));
        const bool hidden_path = name.find("_hh") != std::string::npos;
        return hidden_path ? cfg.lstm_hidden : cfg.lstm_input(layer);
    }
    return cfg.lstm_hidden;  // dense.*
}

}  // namespace params_detail

/// Uniform fan-in initialization, deterministic given the seed.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams<T> p = ModelParams<T>::zeros_like(cfg);
    Rng rng(seed);
    for (auto& view : p.views()) {
        const double k = 1.0 / std::sqrt(static_cast<double>(
                                   params_detail::fan_in_of(cfg, view.name)));
        for (auto& x : view.tensor->values()) x = static_cast<T>(rng.uniform(-k, k));
    }
    return p;
}

}  // namespace mstm::nn
