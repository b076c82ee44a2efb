#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "mstm/nn/params.hpp"

namespace mstm::nn {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators mirroring the parameter shapes.
template <typename T>
struct AdamState {
    ModelParams<T> m;
    ModelParams<T> v;
    std::uint64_t step = 0;

    static AdamState zeros_like(const ModelConfig& cfg) {
        return {ModelParams<T>::zeros_like(cfg), ModelParams<T>::zeros_like(cfg), 0};
    }
};

/// Standard Adam update with bias correction; moment math in double.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg = {}) {
    auto p_views = params.views();
    auto g_views = grads.views();
    auto m_views = state.m.views();
    auto v_views = state.v.views();
    if (p_views.size() != g_views.size()) throw std::invalid_argument("param/grad mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < p_views.size(); ++i) {
        T* p = p_views[i].tensor->data();
        const T* g = g_views[i].tensor->data();
        T* m = m_views[i].tensor->data();
        T* v = v_views[i].tensor->data();
        const std::size_t n = p_views[i].tensor->size();
        if (g_views[i].tensor->size() != n) throw std::invalid_argument("grad shape mismatch");
        for (std::size_t j = 0; j < n; ++j) {
            const double gj = g[j];
            const double mj = cfg.beta1 * static_cast<double>(m[j]) + (1.0 - cfg.beta1) * gj;
            const double vj =
                cfg.beta2 * static_cast<double>(v[j]) + (1.0 - cfg.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double m_hat = mj / bc1;
            const double v_hat = vj / bc2;
            p[j] = static_cast<T>(static_cast<double>(p[j]) -
                                  cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
        }
    }
}

}  // namespace mstm::nn
