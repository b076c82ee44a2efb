#pragma once

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mstm/core/rng.hpp"
#include "mstm/core/thread_pool.hpp"
#include "mstm/field/norm.hpp"
#include "mstm/field/split.hpp"
#include "mstm/field/window.hpp"
#include "mstm/nn/adam.hpp"
#include "mstm/nn/model.hpp"
#include "mstm/train/config.hpp"

namespace mstm::train {

struct TrainReport {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;
    std::vector<double> seconds;     // wall time per epoch (not reproducible)
    std::uint64_t final_epoch = 0;

    // teacher-forcing probe: the (sequence, offset) pairs visited per epoch,
    // recorded only when requested by tests
    bool record_schedule = false;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> schedule;
};

struct TrainResult {
    nn::ModelParams<float> params;
    nn::AdamState<float> adam;
    NormStats stats;
    TrainReport report;
};

/// State to continue an interrupted run; per-epoch shuffles are derived from
/// (seed, epoch), so a resumed run retraces the uninterrupted schedule.
struct TrainStart {
    nn::ModelParams<float> params;
    nn::AdamState<float> adam;
    std::uint64_t epoch = 0;
};

using CheckpointHook =
    std::function<void(std::uint64_t epoch, const nn::ModelParams<float>&,
                       const nn::AdamState<float>&, const TrainReport&)>;
using EpochHook = std::function<void(std::uint64_t epoch, double train_loss, double val_loss)>;

namespace trainer_detail {

struct WindowRef {
    std::size_t seq;
    std::size_t offset;
};

inline std::vector<WindowRef> collect_windows(const std::vector<Sequence>& sequences,
                                              const std::vector<std::size_t>& indices,
                                              std::size_t window) {
    std::vector<WindowRef> refs;
    for (std::size_t s : indices) {
        const auto& seq = sequences.at(s);
        if (seq.length() < window + 1)
            throw std::invalid_argument("sequence too short for the training window");
        for (std::size_t k = 0; k + window < seq.length(); ++k) refs.push_back({s, k});
    }
    return refs;
}

/// Copies ground-truth windows into a batch tensor pair. Inputs are always
/// contiguous slices of a stored sequence (teacher forcing).
inline void fill_batch(const std::vector<Sequence>& sequences,
                       const std::vector<WindowRef>& refs, std::size_t first, std::size_t count,
                       std::size_t window, Tensor<float>& x, Tensor<float>& y) {
    const std::size_t frame_n = sequences.front().frames.front().values.size();
    const std::size_t available = refs.size() - first;
    for (std::size_t b = 0; b < count; ++b) {
        // a final partial batch wraps onto its own start instead of shrinking
        const WindowRef& r = refs[first + b % available];
        const Sequence& seq = sequences[r.seq];
        for (std::size_t t = 0; t < window; ++t)
            std::memcpy(x.data() + (b * window + t) * frame_n,
                        seq.frames[r.offset + t].values.data(), frame_n * sizeof(float));
        std::memcpy(y.data() + b * frame_n, seq.frames[r.offset + window].values.data(),
                    frame_n * sizeof(float));
    }
}

inline double teacher_forced_loss(const nn::Model<float>& model,
                                  const std::vector<Sequence>& sequences,
                                  const std::vector<WindowRef>& refs, std::size_t window,
                                  std::size_t batch_size, ThreadPool* pool) {
    if (refs.empty()) return 0.0;
    const auto& shape = sequences.front().frames.front();
    double total = 0.0;
    for (std::size_t first = 0; first < refs.size(); first += batch_size) {
        const std::size_t count = std::min(batch_size, refs.size() - first);
        Tensor<float> x({count, window, shape.fields(), shape.height(), shape.width()});
        Tensor<float> y({count, shape.fields(), shape.height(), shape.width()});
        fill_batch(sequences, refs, first, count, window, x, y);
        const Tensor<float> pred = model.forward(x, nullptr, pool);
        total += nn::mse_loss(pred, y) * static_cast<double>(count);
    }
    return total / static_cast<double>(refs.size());
}

}  // namespace trainer_detail

/// Teacher-forced training. Normalization stats come from the training
/// split only; validation loss is teacher-forced as well. Deterministic
/// given (sequences, split, configs, seed) for any thread count.
inline TrainResult train(const std::vector<Sequence>& sequences, const DatasetSplit& split,
                         const nn::ModelConfig& mcfg, const TrainConfig& tcfg,
                         ThreadPool* pool = nullptr,
                         const CheckpointHook& checkpoint_hook = {},
                         const EpochHook& epoch_hook = {},
                         std::optional<TrainStart> start = std::nullopt,
                         bool record_schedule = false) {
    using namespace trainer_detail;
    tcfg.validate();
    mcfg.validate();
    if (mcfg.window != tcfg.window)
        throw std::invalid_argument("model window and training window disagree");

    std::vector<Sequence> train_seqs;
    for (std::size_t i : split.train) train_seqs.push_back(sequences.at(i));
    NormStats stats = compute_norm_stats(train_seqs);

    std::vector<Sequence> normalized = sequences;
    for (auto& seq : normalized) normalize_in_place(seq, stats);

    auto train_refs = collect_windows(normalized, split.train, tcfg.window);
    auto val_refs = collect_windows(normalized, split.val, tcfg.window);
    if (train_refs.empty()) throw std::invalid_argument("no training windows");

    TrainResult result{
        start ? std::move(start->params) : nn::init_params<float>(mcfg, tcfg.seed),
        start ? std::move(start->adam) : nn::AdamState<float>::zeros_like(mcfg),
        std::move(stats),
        {}};
    const std::uint64_t first_epoch = start ? start->epoch : 0;
    nn::Model<float> model(std::move(result.params));
    result.report.record_schedule = record_schedule;

    const auto& shape = normalized.front().frames.front();
    const std::size_t B = tcfg.batch_size;
    Tensor<float> x({B, tcfg.window, shape.fields(), shape.height(), shape.width()});
    Tensor<float> y({B, shape.fields(), shape.height(), shape.width()});
    nn::ForwardCache<float> cache;
    nn::AdamConfig adam_cfg;
    adam_cfg.lr = tcfg.lr;

    double best_val = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_best = 0;

    for (std::uint64_t epoch = first_epoch; epoch < first_epoch + tcfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<WindowRef> order = train_refs;
        Rng::forked(tcfg.seed, epoch).shuffle(order);

        if (record_schedule) {
            result.report.schedule.emplace_back();
            for (const auto& r : order) result.report.schedule.back().emplace_back(r.seq, r.offset);
        }

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t first = 0; first < order.size(); first += B) {
            fill_batch(normalized, order, first, B, tcfg.window, x, y);
            model.forward(x, &cache, pool);
            const double batch_loss = [&] {
                Tensor<float> pred_view({B, shape.fields(), shape.height(), shape.width()});
                std::memcpy(pred_view.data(), cache.pred.data(),
                            cache.pred.size() * sizeof(float));
                return nn::mse_loss(pred_view, y);
            }();
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("non-finite training loss at epoch " +
                                         std::to_string(epoch));
            auto grads = model.backward(x, y, cache, pool);
            nn::adam_step(model.params(), grads, result.adam, adam_cfg);
            epoch_loss += batch_loss;
            ++n_batches;
        }
        epoch_loss /= static_cast<double>(n_batches);

        const double val_loss =
            teacher_forced_loss(model, normalized, val_refs, tcfg.window, B, pool);
        const auto t1 = std::chrono::steady_clock::now();

        result.report.train_loss.push_back(epoch_loss);
        result.report.val_loss.push_back(val_loss);
        result.report.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        result.report.final_epoch = epoch + 1;

        if (epoch_hook) epoch_hook(epoch, epoch_loss, val_loss);
        if (checkpoint_hook && tcfg.checkpoint_interval &&
            (epoch + 1 - first_epoch) % tcfg.checkpoint_interval == 0)
            checkpoint_hook(epoch + 1, model.params(), result.adam, result.report);

        if (tcfg.patience) {
            if (val_loss < best_val) {
                best_val = val_loss;
                epochs_since_best = 0;
            } else if (++epochs_since_best >= tcfg.patience) {
                break;
            }
        }
    }

    if (!model.params().all_finite())
        throw std::runtime_error("non-finite parameters after training");
    result.params = std::move(model.params());
    if (checkpoint_hook)
        checkpoint_hook(result.report.final_epoch, result.params, result.adam, result.report);
    return result;
}

}  // namespace mstm::train
