#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstm::nn {

/// Network dimensions. Defaults are the full-size model: two conv layers
/// (64/128 channels, 3x3, padding 1, each followed by ReLU and 2x2 max
/// pooling), a 4-layer LSTM with 512 hidden units fed the flattened
/// features, and a dense head projecting the final hidden state back to one
/// frame.
struct ModelConfig {
    std::size_t fields = 7;
    std::size_t height = 60;
    std::size_t width = 60;
    std::size_t window = 5;
    std::size_t conv1_out = 64;
    std::size_t conv2_out = 128;
    std::size_t kernel = 3;
    std::size_t lstm_hidden = 512;
    std::size_t lstm_layers = 4;

    std::size_t pooled_height() const { return height / 4; }
    std::size_t pooled_width() const { return width / 4; }
    std::size_t feature_size() const { return conv2_out * pooled_height() * pooled_width(); }
    std::size_t output_size() const { return fields * height * width; }
    std::size_t lstm_input(std::size_t layer) const {
        return layer == 0 ? feature_size() : lstm_hidden;
    }

    void validate() const {
        if (height % 4 != 0 || width % 4 != 0)
            throw std::invalid_argument("height and width must be divisible by 4");
        if (kernel != 3) throw std::invalid_argument("only 3x3 kernels are supported");
        for (std::size_t v : {fields, height, width, window, conv1_out, conv2_out, lstm_hidden,
                              lstm_layers})
            if (v == 0) throw std::invalid_argument("all model dimensions must be positive");
    }
};

struct LayerCount {
    std::string name;
    std::size_t count;
};

/// Exact per-layer parameter counts by shape arithmetic.
inline std::vector<LayerCount> param_breakdown(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<LayerCount> out;
    const std::size_t k2 = cfg.kernel * cfg.kernel;
    out.push_back({"conv1", cfg.conv1_out * cfg.fields * k2 + cfg.conv1_out});
    out.push_back({"conv2", cfg.conv2_out * cfg.conv1_out * k2 + cfg.conv2_out});
    for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
        const std::size_t in = cfg.lstm_input(l);
        const std::size_t h = cfg.lstm_hidden;
        out.push_back({"lstm" + std::to_string(l), 4 * h * in + 4 * h * h + 8 * h});
    }
    out.push_back({"dense", cfg.output_size() * cfg.lstm_hidden + cfg.output_size()});
    return out;
}

inline std::size_t param_count(const ModelConfig& cfg) {
    std::size_t total = 0;
    for (const auto& layer : param_breakdown(cfg)) total += layer.count;
    return total;
}

}  // namespace mstm::nn
