#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mstm::train {

/// Training hyperparameters. The `paper` preset mirrors the published
/// regime; `desk` is the reduced configuration this toolkit runs locally.
struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double lr = 5e-4;
    std::size_t window = 5;
    std::uint64_t seed = 0;
    std::size_t checkpoint_interval = 0;  // epochs between checkpoints; 0 = final only
    std::size_t patience = 0;             // 0 = no early stopping

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    }

    static TrainConfig desk() { return {}; }

    static TrainConfig paper() {
        TrainConfig cfg;
        cfg.epochs = 1000;
        cfg.batch_size = 256;
        return cfg;
    }

    static TrainConfig preset(const std::string& name) {
        if (name == "desk") return desk();
        if (name == "paper") return paper();
        throw std::invalid_argument("unknown training preset: " + name);
    }
};

}  // namespace mstm::train
