#include <gtest/gtest.h>

#include "mstm/nn/adam.hpp"

using namespace mstm;
using namespace mstm::nn;

namespace {

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.fields = 1;
    cfg.height = 4;
    cfg.width = 4;
    cfg.window = 1;
    cfg.conv1_out = 1;
    cfg.conv2_out = 1;
    cfg.lstm_hidden = 2;
    cfg.lstm_layers = 1;
    return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
    const auto cfg = micro_config();
    auto params = init_params<float>(cfg, 1);
    const auto before = init_params<float>(cfg, 1);
    auto grads = ModelParams<float>::zeros_like(cfg);
    auto state = AdamState<float>::zeros_like(cfg);
    adam_step(params, grads, state);
    auto a = params.views();
    auto b = before.views();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(*a[i].tensor == *b[i].tensor);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
    const auto cfg = micro_config();
    auto params = ModelParams<double>::zeros_like(cfg);
    auto grads = ModelParams<double>::zeros_like(cfg);
    grads.conv1_w[0] = 0.37;    // positive gradient
    grads.dense_b[1] = -2.4e3;  // negative gradient, large magnitude
    auto state = AdamState<double>::zeros_like(cfg);
    AdamConfig acfg;
    acfg.lr = 5e-4;
    adam_step(params, grads, state, acfg);
    // bias-corrected first step is lr * g/(|g| + eps') ~= lr * sign(g)
    EXPECT_NEAR(params.conv1_w[0], -acfg.lr, 1e-6);
    EXPECT_NEAR(params.dense_b[1], acfg.lr, 1e-6);
    EXPECT_EQ(params.dense_b[0], 0.0);
}

TEST(Adam, ConvergesOnTwoParameterQuadratic) {
    // f(x, y) = (x - 0.7)^2 + 5 (y + 0.3)^2, minimizer (0.7, -0.3)
    const auto cfg = micro_config();
    auto params = ModelParams<double>::zeros_like(cfg);
    auto state = AdamState<double>::zeros_like(cfg);
    AdamConfig acfg;
    acfg.lr = 0.05;
    double& x = params.conv1_b[0];
    double& y = params.conv2_b[0];
    for (int it = 0; it < 200; ++it) {
        auto grads = ModelParams<double>::zeros_like(cfg);
        grads.conv1_b[0] = 2.0 * (x - 0.7);
        grads.conv2_b[0] = 10.0 * (y + 0.3);
        adam_step(params, grads, state, acfg);
    }
    EXPECT_NEAR(x, 0.7, 1e-3);
    EXPECT_NEAR(y, -0.3, 1e-3);
}

TEST(Adam, StateShapesMirrorParameters) {
    const auto cfg = micro_config();
    const auto params = ModelParams<float>::zeros_like(cfg);
    const auto state = AdamState<float>::zeros_like(cfg);
    const auto p = params.views();
    const auto m = state.m.views();
    const auto v = state.v.views();
    ASSERT_EQ(p.size(), m.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(p[i].tensor->shape(), m[i].tensor->shape());
        EXPECT_EQ(p[i].tensor->shape(), v[i].tensor->shape());
    }
}

TEST(Adam, ParamsStayFiniteUnderNoisySteps) {
    const auto cfg = micro_config();
    auto params = init_params<float>(cfg, 3);
    auto state = AdamState<float>::zeros_like(cfg);
    Rng rng(4);
    for (int it = 0; it < 50; ++it) {
        auto grads = ModelParams<float>::zeros_like(cfg);
        for (auto& view : grads.views())
            for (auto& g : view.tensor->values())
                g = static_cast<float>(rng.uniform(-100.0, 100.0));
        adam_step(params, grads, state);
        ASSERT_TRUE(params.all_finite());
    }
}
