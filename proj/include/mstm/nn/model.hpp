#pragma once

#include <cstring>
#include <stdexcept>
#include <vector>

#include "mstm/core/gemm.hpp"
#include "mstm/core/tensor.hpp"
#include "mstm/core/thread_pool.hpp"
#include "mstm/nn/layers.hpp"
#include "mstm/nn/params.hpp"

namespace mstm::nn {

namespace model_detail {

template <typename T>
std::vector<T>& scratch(std::size_t n) {
    thread_local std::vector<T> buf;
    if (buf.size() < n) buf.resize(n);
    return buf;
}

}  // namespace model_detail

/// Activations remembered by the forward pass for backpropagation.
template <typename T>
struct ForwardCache {
    struct ConvStep {
        Tensor<T> conv1_post;  // (B, c1, H, W), post-ReLU
        Tensor<T> pool1_out;   // (B, c1, H/2, W/2)
        std::vector<std::uint8_t> pool1_idx;
        Tensor<T> conv2_post;  // (B, c2, H/2, W/2), post-ReLU
        Tensor<T> features;    // (B, c2, H/4, W/4); rows double as the LSTM input
        std::vector<std::uint8_t> pool2_idx;
    };
    std::size_t batch = 0;
    std::vector<ConvStep> steps;
    // gate activations and states, each (L, T, B, h)
    Tensor<T> gate_i, gate_f, gate_g, gate_o;
    Tensor<T> cell, tanh_cell, hidden;
    Tensor<T> pred;  // (B, F*H*W)
};

inline constexpr double kReluLeak = 0.0;  // plain ReLU throughout

/// Mean squared error over every entry, accumulated in double precision.
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss shape mismatch");
    double acc = 0.0;
    const T* a = pred.data();
    const T* b = target.data();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

/// The CNN-LSTM next-frame predictor. All entry points are const and
/// re-entrant; parallelism only ever partitions disjoint outputs, so results
/// do not depend on the thread count.
template <typename T>
class Model {
  public:
    explicit Model(ModelParams<T> params) : cfg_(params.cfg), params_(std::move(params)) {
        cfg_.validate();
    }

    const ModelConfig& config() const { return cfg_; }
    const ModelParams<T>& params() const { return params_; }
    ModelParams<T>& params() { return params_; }

    /// Two conv+ReLU+maxpool stages for a batch of frames.
    /// frames: (B, F, H, W) -> features (B, c2, H/4, W/4).
    Tensor<T> conv_block(const Tensor<T>& frames, ThreadPool* pool = nullptr) const {
        if (frames.rank() != 4 || frames.dim(1) != cfg_.fields || frames.dim(2) != cfg_.height ||
            frames.dim(3) != cfg_.width)
            throw std::invalid_argument("conv_block input shape mismatch");
        typename ForwardCache<T>::ConvStep cache;
        conv_step(frames.data(), frames.dim(0), frames.size() / frames.dim(0), cache, pool);
        return cache.features;
    }

    /// Full forward pass. x: (B, T_w, F, H, W) -> prediction (B, F, H, W).
    Tensor<T> forward(const Tensor<T>& x, ForwardCache<T>* cache = nullptr,
                      ThreadPool* pool = nullptr) const {
        check_input(x);
        ForwardCache<T> local;
        ForwardCache<T>& c = cache ? *cache : local;
        run_forward(x, c, pool);
        Tensor<T> out({c.batch, cfg_.fields, cfg_.height, cfg_.width});
        std::memcpy(out.data(), c.pred.data(), c.pred.size() * sizeof(T));
        return out;
    }

    /// Gradients of mse_loss(forward(x), target) for every parameter.
    /// `cache` must come from a forward(x, &cache) call with the same x.
    ModelParams<T> backward(const Tensor<T>& x, const Tensor<T>& target,
                            const ForwardCache<T>& cache, ThreadPool* pool = nullptr) const {
        check_input(x);
        const std::size_t B = cache.batch;
        const std::size_t out_n = cfg_.output_size();
        if (target.size() != B * out_n) throw std::invalid_argument("target shape mismatch");

        ModelParams<T> grads = ModelParams<T>::zeros_like(cfg_);

        // d loss / d pred
        Tensor<T> dpred({B, out_n});
        {
            const T scale = T(2) / static_cast<T>(B * out_n);
            const T* p = cache.pred.data();
            const T* t = target.data();
            for (std::size_t i = 0; i < B * out_n; ++i) dpred[i] = scale * (p[i] - t[i]);
        }

        // dense head
        const std::size_t h = cfg_.lstm_hidden;
        const std::size_t L = cfg_.lstm_layers;
        const std::size_t Tw = cfg_.window;
        const T* h_final = state_at(cache.hidden, L - 1, Tw - 1, B);
        {
            auto& dpred_t = model_detail::scratch<T>(out_n * B);
            transpose(dpred.data(), B, out_n, dpred_t.data());
            gemm_or_par(pool, out_n, h, B, dpred_t.data(), B, h_final, h, false,
                        grads.dense_w.data(), h);
            for (std::size_t b = 0; b < B; ++b) {
                const T* row = dpred.data() + b * out_n;
                T* db = grads.dense_b.data();
                for (std::size_t o = 0; o < out_n; ++o) db[o] += row[o];
            }
        }

        // running dh/dc per layer, (B, h) each
        Tensor<T> dh({L, B, h});
        Tensor<T> dc({L, B, h});
        gemm_or_par(pool, B, h, out_n, dpred.data(), out_n, params_.dense_w.data(), h, false,
                    dh.data() + (L - 1) * B * h, h);

        Tensor<T> dgates({B, 4 * h});
        Tensor<T> dgates_t({4 * h, B});
        std::vector<Tensor<T>> dfeatures(Tw);

        for (std::size_t t = Tw; t-- > 0;) {
            for (std::size_t l = L; l-- > 0;) {
                const std::size_t in_l = cfg_.lstm_input(l);
                T* dh_l = dh.data() + l * B * h;
                T* dc_l = dc.data() + l * B * h;
                const T* gi = state_at(cache.gate_i, l, t, B);
                const T* gf = state_at(cache.gate_f, l, t, B);
                const T* gg = state_at(cache.gate_g, l, t, B);
                const T* go = state_at(cache.gate_o, l, t, B);
                const T* tc = state_at(cache.tanh_cell, l, t, B);
                const T* c_prev = t > 0 ? state_at(cache.cell, l, t - 1, B) : nullptr;

                for (std::size_t r = 0; r < B * h; ++r) {
                    const T dhv = dh_l[r];
                    const T dcv = dc_l[r] + dhv * go[r] * (T(1) - tc[r] * tc[r]);
                    const T da_o = dhv * tc[r] * go[r] * (T(1) - go[r]);
                    const T da_i = dcv * gg[r] * gi[r] * (T(1) - gi[r]);
                    const T da_f =
                        c_prev ? dcv * c_prev[r] * gf[r] * (T(1) - gf[r]) : T(0);
                    const T da_g = dcv * gi[r] * (T(1) - gg[r] * gg[r]);
                    const std::size_t b = r / h, j = r % h;
                    T* grow = dgates.data() + b * 4 * h;
                    grow[j] = da_i;
                    grow[h + j] = da_f;
                    grow[2 * h + j] = da_g;
                    grow[3 * h + j] = da_o;
                    dc_l[r] = dcv * gf[r];  // carried to t-1
                }

                // bias gradients: ordered sum over the batch
                {
                    T* bi = grads.lstm[l].b_ih.data();
                    T* bh = grads.lstm[l].b_hh.data();
                    for (std::size_t b = 0; b < B; ++b) {
                        const T* grow = dgates.data() + b * 4 * h;
                        for (std::size_t j = 0; j < 4 * h; ++j) {
                            bi[j] += grow[j];
                            bh[j] += grow[j];
                        }
                    }
                }

                transpose(dgates.data(), B, 4 * h, dgates_t.data());

                // dW_ih += dgates^T * x_t
                const T* x_lt = l == 0 ? cache.steps[t].features.data()
                                       : state_at(cache.hidden, l - 1, t, B);
                gemm_or_par(pool, 4 * h, in_l, B, dgates_t.data(), B, x_lt, in_l, false,
                            grads.lstm[l].w_ih.data(), in_l);
                if (t > 0) {
                    const T* h_prev = state_at(cache.hidden, l, t - 1, B);
                    gemm_or_par(pool, 4 * h, h, B, dgates_t.data(), B, h_prev, h, false,
                                grads.lstm[l].w_hh.data(), h);
                }

                // dh for t-1 via the recurrent weights (replaces dh_l)
                std::memset(dh_l, 0, B * h * sizeof(T));
                if (t > 0)
                    gemm_or_par(pool, B, h, 4 * h, dgates.data(), 4 * h,
                                params_.lstm[l].w_hh.data(), h, false, dh_l, h);

                // dx_t: down one layer, or out to the conv stack
                if (l > 0) {
                    gemm_or_par(pool, B, h, 4 * h, dgates.data(), 4 * h,
                                params_.lstm[l].w_ih.data(), in_l, false,
                                dh.data() + (l - 1) * B * h, h);
                } else {
                    dfeatures[t] = Tensor<T>({B, in_l});
                    gemm_or_par(pool, B, in_l, 4 * h, dgates.data(), 4 * h,
                                params_.lstm[l].w_ih.data(), in_l, false, dfeatures[t].data(),
                                in_l);
                }
            }
        }

        conv_backward(x, cache, dfeatures, grads, pool);
        return grads;
    }

  private:
    void check_input(const Tensor<T>& x) const {
        if (x.rank() != 5 || x.dim(1) != cfg_.window || x.dim(2) != cfg_.fields ||
            x.dim(3) != cfg_.height || x.dim(4) != cfg_.width)
            throw std::invalid_argument("forward input must be (B, T_w, F, H, W), got " +
                                        Tensor<T>::shape_string(x.shape()));
        if (x.dim(0) == 0) throw std::invalid_argument("empty batch");
    }

    static const T* state_at(const Tensor<T>& t4, std::size_t l, std::size_t t, std::size_t B) {
        const std::size_t h = t4.shape().back();
        return t4.data() + ((l * t4.dim(1) + t) * B) * h;
    }
    static T* state_at(Tensor<T>& t4, std::size_t l, std::size_t t, std::size_t B) {
        const std::size_t h = t4.shape().back();
        return t4.data() + ((l * t4.dim(1) + t) * B) * h;
    }

    static void gemm_or_par(ThreadPool* pool, std::size_t M, std::size_t N, std::size_t K,
                            const T* A, std::size_t lda, const T* B, std::size_t ldb,
                            bool trans_b, T* C, std::size_t ldc) {
        if (pool)
            gemm_par(*pool, M, N, K, A, lda, B, ldb, trans_b, C, ldc);
        else
            gemm(M, N, K, A, lda, B, ldb, trans_b, C, ldc);
    }

    /// One conv stage pair for a batch laid out with per-sample stride
    /// `sample_stride` starting at `frames`.
    void conv_step(const T* frames, std::size_t B, std::size_t sample_stride,
                   typename ForwardCache<T>::ConvStep& cache, ThreadPool* pool) const {
        const std::size_t H = cfg_.height, W = cfg_.width;
        const std::size_t h2 = H / 2, w2 = W / 2, h4 = H / 4, w4 = W / 4;
        const std::size_t c1 = cfg_.conv1_out, c2 = cfg_.conv2_out;
        cache.conv1_post = Tensor<T>({B, c1, H, W});
        cache.pool1_out = Tensor<T>({B, c1, h2, w2});
        cache.pool1_idx.assign(B * c1 * h2 * w2, 0);
        cache.conv2_post = Tensor<T>({B, c2, h2, w2});
        cache.features = Tensor<T>({B, c2, h4, w4});
        cache.pool2_idx.assign(B * c2 * h4 * w4, 0);

        auto run_sample = [&](std::size_t b) {
            const std::size_t k1 = cfg_.fields * 9, k2 = c1 * 9;
            auto& col = model_detail::scratch<T>(std::max(k1 * H * W, k2 * h2 * w2));
            const T* in = frames + b * sample_stride;
            T* conv1 = cache.conv1_post.data() + b * c1 * H * W;
            im2col_3x3(in, cfg_.fields, H, W, col.data());
            conv_bias_relu(params_.conv1_w.data(), params_.conv1_b.data(), col.data(), c1, k1,
                           H * W, conv1);
            T* pool1 = cache.pool1_out.data() + b * c1 * h2 * w2;
            maxpool2_forward(conv1, c1, H, W, pool1, cache.pool1_idx.data() + b * c1 * h2 * w2);
            T* conv2 = cache.conv2_post.data() + b * c2 * h2 * w2;
            im2col_3x3(pool1, c1, h2, w2, col.data());
            conv_bias_relu(params_.conv2_w.data(), params_.conv2_b.data(), col.data(), c2, k2,
                           h2 * w2, conv2);
            T* feat = cache.features.data() + b * c2 * h4 * w4;
            maxpool2_forward(conv2, c2, h2, w2, feat, cache.pool2_idx.data() + b * c2 * h4 * w4);
        };
        if (pool)
            pool->parallel_for(B, run_sample);
        else
            for (std::size_t b = 0; b < B; ++b) run_sample(b);
    }

    void run_forward(const Tensor<T>& x, ForwardCache<T>& cache, ThreadPool* pool) const {
        const std::size_t B = x.dim(0);
        const std::size_t Tw = cfg_.window;
        const std::size_t h = cfg_.lstm_hidden;
        const std::size_t L = cfg_.lstm_layers;
        const std::size_t frame_n = cfg_.fields * cfg_.height * cfg_.width;

        cache.batch = B;
        cache.steps.resize(Tw);
        for (std::size_t t = 0; t < Tw; ++t)
            conv_step(x.data() + t * frame_n, B, Tw * frame_n, cache.steps[t], pool);

        cache.gate_i = Tensor<T>({L, Tw, B, h});
        cache.gate_f = Tensor<T>({L, Tw, B, h});
        cache.gate_g = Tensor<T>({L, Tw, B, h});
        cache.gate_o = Tensor<T>({L, Tw, B, h});
        cache.cell = Tensor<T>({L, Tw, B, h});
        cache.tanh_cell = Tensor<T>({L, Tw, B, h});
        cache.hidden = Tensor<T>({L, Tw, B, h});

        Tensor<T> gates({B, 4 * h});
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t in_l = cfg_.lstm_input(l);
            const auto& layer = params_.lstm[l];
            for (std::size_t t = 0; t < Tw; ++t) {
                const T* x_lt = l == 0 ? cache.steps[t].features.data()
                                       : state_at(cache.hidden, l - 1, t, B);
                gates.fill(T(0));
                gemm_or_par(pool, B, 4 * h, in_l, x_lt, in_l, layer.w_ih.data(), in_l, true,
                            gates.data(), 4 * h);
                if (t > 0) {
                    const T* h_prev = state_at(cache.hidden, l, t - 1, B);
                    gemm_or_par(pool, B, 4 * h, h, h_prev, h, layer.w_hh.data(), h, true,
                                gates.data(), 4 * h);
                }
                const T* c_prev = t > 0 ? state_at(cache.cell, l, t - 1, B) : nullptr;
                T* gi = state_at(cache.gate_i, l, t, B);
                T* gf = state_at(cache.gate_f, l, t, B);
                T* gg = state_at(cache.gate_g, l, t, B);
                T* go = state_at(cache.gate_o, l, t, B);
                T* cc = state_at(cache.cell, l, t, B);
                T* tc = state_at(cache.tanh_cell, l, t, B);
                T* hh = state_at(cache.hidden, l, t, B);
                const T* bi = layer.b_ih.data();
                const T* bh = layer.b_hh.data();
                for (std::size_t b = 0; b < B; ++b) {
                    const T* grow = gates.data() + b * 4 * h;
                    for (std::size_t j = 0; j < h; ++j) {
                        const std::size_t r = b * h + j;
                        const T ai = grow[j] + bi[j] + bh[j];
                        const T af = grow[h + j] + bi[h + j] + bh[h + j];
                        const T ag = grow[2 * h + j] + bi[2 * h + j] + bh[2 * h + j];
                        const T ao = grow[3 * h + j] + bi[3 * h + j] + bh[3 * h + j];
                        gi[r] = sigmoid(ai);
                        gf[r] = sigmoid(af);
                        gg[r] = std::tanh(ag);
                        go[r] = sigmoid(ao);
                        const T cp = c_prev ? c_prev[r] : T(0);
                        cc[r] = gf[r] * cp + gi[r] * gg[r];
                        tc[r] = std::tanh(cc[r]);
                        hh[r] = go[r] * tc[r];
                    }
                }
            }
        }

        const std::size_t out_n = cfg_.output_size();
        cache.pred = Tensor<T>({B, out_n});
        const T* h_final = state_at(cache.hidden, L - 1, Tw - 1, B);
        gemm_or_par(pool, B, out_n, h, h_final, h, params_.dense_w.data(), h, true,
                    cache.pred.data(), out_n);
        for (std::size_t b = 0; b < B; ++b) {
            T* row = cache.pred.data() + b * out_n;
            const T* bias = params_.dense_b.data();
            for (std::size_t o = 0; o < out_n; ++o) row[o] += bias[o];
        }
        if (!cache.pred.all_finite())
            throw std::runtime_error("non-finite activation in forward pass");
    }

    /// Backprop through both conv stages for every timestep. Each sample
    /// writes its own weight-gradient buffer; buffers are reduced in sample
    /// order so the result is thread-count independent.
    void conv_backward(const Tensor<T>& x, const ForwardCache<T>& cache,
                       const std::vector<Tensor<T>>& dfeatures, ModelParams<T>& grads,
                       ThreadPool* pool) const {
        const std::size_t B = cache.batch;
        const std::size_t H = cfg_.height, W = cfg_.width;
        const std::size_t h2 = H / 2, w2 = W / 2;
        const std::size_t c1 = cfg_.conv1_out, c2 = cfg_.conv2_out;
        const std::size_t k1 = cfg_.fields * 9, k2 = c1 * 9;
        const std::size_t frame_n = cfg_.fields * H * W;
        const std::size_t Tw = cfg_.window;

        const std::size_t per_sample = c2 * k2 + c2 + c1 * k1 + c1;
        std::vector<T> shard(B * per_sample, T(0));

        // W2^T reused by every sample
        std::vector<T> w2_t(k2 * c2);
        transpose(params_.conv2_w.data(), c2, k2, w2_t.data());

        for (std::size_t t = 0; t < Tw; ++t) {
            const auto& step = cache.steps[t];
            auto run_sample = [&](std::size_t b) {
                T* dw2 = shard.data() + b * per_sample;
                T* db2 = dw2 + c2 * k2;
                T* dw1 = db2 + c2;
                T* db1 = dw1 + c1 * k1;

                auto& buf = model_detail::scratch<T>(
                    c2 * h2 * w2 + k2 * h2 * w2 + c1 * h2 * w2 + c1 * H * W +
                    std::max(k2 * h2 * w2, k1 * H * W));
                T* dconv2 = buf.data();
                T* dcol2 = dconv2 + c2 * h2 * w2;
                T* dpool1 = dcol2 + k2 * h2 * w2;
                T* dconv1 = dpool1 + c1 * h2 * w2;
                T* col = dconv1 + c1 * H * W;

                // pool2 backward into dconv2, masked by conv2's ReLU
                maxpool2_backward(dfeatures[t].data() + b * c2 * (h2 / 2) * (w2 / 2),
                                  step.pool2_idx.data() + b * c2 * (h2 / 2) * (w2 / 2), c2, h2,
                                  w2, dconv2);
                const T* conv2_post = step.conv2_post.data() + b * c2 * h2 * w2;
                for (std::size_t i = 0; i < c2 * h2 * w2; ++i)
                    if (!(conv2_post[i] > T(0))) dconv2[i] = T(0);

                // conv2 parameter grads
                const T* pool1 = step.pool1_out.data() + b * c1 * h2 * w2;
                im2col_3x3(pool1, c1, h2, w2, col);
                gemm<T>(c2, k2, h2 * w2, dconv2, h2 * w2, col, h2 * w2, true, dw2, k2);
                for (std::size_t co = 0; co < c2; ++co) {
                    T s = T(0);
                    const T* row = dconv2 + co * h2 * w2;
                    for (std::size_t p = 0; p < h2 * w2; ++p) s += row[p];
                    db2[co] += s;
                }

                // back to pool1
                std::memset(dcol2, 0, k2 * h2 * w2 * sizeof(T));
                gemm<T>(k2, h2 * w2, c2, w2_t.data(), c2, dconv2, h2 * w2, false, dcol2,
                        h2 * w2);
                std::memset(dpool1, 0, c1 * h2 * w2 * sizeof(T));
                col2im_3x3(dcol2, c1, h2, w2, dpool1);

                maxpool2_backward(dpool1, step.pool1_idx.data() + b * c1 * h2 * w2, c1, H, W,
                                  dconv1);
                const T* conv1_post = step.conv1_post.data() + b * c1 * H * W;
                for (std::size_t i = 0; i < c1 * H * W; ++i)
                    if (!(conv1_post[i] > T(0))) dconv1[i] = T(0);

                // conv1 parameter grads; input gradients are not needed
                const T* in = x.data() + (b * Tw + t) * frame_n;
                im2col_3x3(in, cfg_.fields, H, W, col);
                gemm<T>(c1, k1, H * W, dconv1, H * W, col, H * W, true, dw1, k1);
                for (std::size_t co = 0; co < c1; ++co) {
                    T s = T(0);
                    const T* row = dconv1 + co * H * W;
                    for (std::size_t p = 0; p < H * W; ++p) s += row[p];
                    db1[co] += s;
                }
            };
            if (pool)
                pool->parallel_for(B, run_sample);
            else
                for (std::size_t b = 0; b < B; ++b) run_sample(b);
        }

        // ordered reduction over samples
        for (std::size_t b = 0; b < B; ++b) {
            const T* dw2 = shard.data() + b * per_sample;
            const T* db2 = dw2 + c2 * k2;
            const T* dw1 = db2 + c2;
            const T* db1 = dw1 + c1 * k1;
            for (std::size_t i = 0; i < c2 * k2; ++i) grads.conv2_w[i] += dw2[i];
            for (std::size_t i = 0; i < c2; ++i) grads.conv2_b[i] += db2[i];
            for (std::size_t i = 0; i < c1 * k1; ++i) grads.conv1_w[i] += dw1[i];
            for (std::size_t i = 0; i < c1; ++i) grads.conv1_b[i] += db1[i];
        }
    }

    ModelConfig cfg_;
    ModelParams<T> params_;
};

}  // namespace mstm::nn
