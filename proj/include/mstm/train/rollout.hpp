#pragma once

#include <cstring>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mstm/core/thread_pool.hpp"
#include "mstm/field/norm.hpp"
#include "mstm/nn/model.hpp"

namespace mstm::train {

struct RolloutResult {
    std::vector<FieldFrame> predictions;  // normalized scale
    bool truncated = false;               // a non-finite prediction stopped the roll
    std::string diagnostic;
};

/// Called before each prediction with the window contents (oldest first) and
/// how many of them are model outputs.
using RolloutObserver =
    std::function<void(std::size_t step, std::span<const FieldFrame* const> window,
                       std::size_t model_frames)>;

/// Sliding-window autoregressive inference: the first prediction comes from
/// the seed frames; afterwards the newest prediction replaces the oldest
/// window entry. Seed frames must already be normalized with training stats.
inline RolloutResult rollout(const nn::Model<float>& model,
                             std::span<const FieldFrame> seed_frames, std::size_t n_steps,
                             ThreadPool* pool = nullptr, const RolloutObserver& observer = {}) {
    const auto& cfg = model.config();
    if (seed_frames.size() != cfg.window)
        throw std::invalid_argument("rollout needs exactly window seed frames");
    for (const auto& f : seed_frames)
        if (f.fields() != cfg.fields || f.height() != cfg.height || f.width() != cfg.width)
            throw std::invalid_argument("seed frame shape mismatch");

    RolloutResult result;
    result.predictions.reserve(n_steps);
    std::deque<const FieldFrame*> window;
    for (const auto& f : seed_frames) window.push_back(&f);

    const std::size_t frame_n = cfg.fields * cfg.height * cfg.width;
    Tensor<float> x({1, cfg.window, cfg.fields, cfg.height, cfg.width});

    for (std::size_t step = 0; step < n_steps; ++step) {
        if (observer) {
            std::vector<const FieldFrame*> contents(window.begin(), window.end());
            observer(step, contents, std::min(step, cfg.window));
        }
        for (std::size_t t = 0; t < cfg.window; ++t)
            std::memcpy(x.data() + t * frame_n, window[t]->values.data(),
                        frame_n * sizeof(float));
        Tensor<float> pred;
        try {
            pred = model.forward(x, nullptr, pool);
        } catch (const std::runtime_error& e) {
            result.truncated = true;
            result.diagnostic = e.what();
            break;
        }
        FieldFrame frame(cfg.fields, cfg.height, cfg.width);
        std::memcpy(frame.values.data(), pred.data(), frame_n * sizeof(float));
        result.predictions.push_back(std::move(frame));
        window.pop_front();
        window.push_back(&result.predictions.back());
    }
    return result;
}

/// Ground truth paired with a full-length prediction (seed frames followed
/// by denormalized rollout output).
struct PairedSequence {
    Sequence truth;
    Sequence prediction;
    bool truncated = false;
};

/// Rolls each held-out sequence to full length from its first five true
/// frames and denormalizes for reporting.
inline std::vector<PairedSequence> evaluate_rollouts(const nn::Model<float>& model,
                                                     std::span<const Sequence> test_sequences,
                                                     const NormStats& stats,
                                                     ThreadPool* pool = nullptr) {
    const auto& cfg = model.config();
    std::vector<PairedSequence> out;
    out.reserve(test_sequences.size());
    for (const auto& truth : test_sequences) {
        if (truth.length() < cfg.window + 1)
            throw std::invalid_argument("test sequence shorter than the window");
        std::vector<FieldFrame> seeds;
        seeds.reserve(cfg.window);
        for (std::size_t t = 0; t < cfg.window; ++t)
            seeds.push_back(normalize(truth.frames[t], stats));

        RolloutResult roll =
            rollout(model, seeds, truth.length() - cfg.window, pool);

        PairedSequence pair;
        pair.truth = truth;
        pair.truncated = roll.truncated;
        pair.prediction.frame_interval = truth.frame_interval;
        pair.prediction.params = truth.params;
        pair.prediction.frames.reserve(truth.length());
        for (std::size_t t = 0; t < cfg.window; ++t)
            pair.prediction.frames.push_back(truth.frames[t]);
        for (const auto& frame : roll.predictions)
            pair.prediction.frames.push_back(denormalize(frame, stats));
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace mstm::train
