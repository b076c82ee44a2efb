#include <gtest/gtest.h>

#include "mstm/core/rng.hpp"
#include "mstm/nn/model.hpp"
#include "oracles/naive_nn.hpp"

using namespace mstm;
using namespace mstm::nn;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.fields = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.window = 3;
    cfg.conv1_out = 3;
    cfg.conv2_out = 4;
    cfg.lstm_hidden = 4;
    cfg.lstm_layers = 2;
    return cfg;
}

template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1, double hi = 1) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

}  // namespace

TEST(ParamCount, LayerExamplesFromShapeArithmetic) {
    const ModelConfig cfg;  // defaults
    const auto breakdown = param_breakdown(cfg);
    EXPECT_EQ(breakdown[0].name, "conv1");
    EXPECT_EQ(breakdown[0].count, 7u * 64 * 9 + 64);  // = 4096
    EXPECT_EQ(breakdown[0].count, 4096u);
    EXPECT_EQ(breakdown.back().name, "dense");
    EXPECT_EQ(breakdown.back().count, 512u * 25200 + 25200);  // = 12,927,600
    EXPECT_EQ(breakdown.back().count, 12927600u);
}

TEST(ParamCount, DefaultTotalMatchesIndependentArithmetic) {
    const ModelConfig cfg;
    // independent shape arithmetic, written out term by term
    std::size_t expected = 0;
    expected += 64 * 7 * 3 * 3 + 64;                     // conv1
    expected += 128 * 64 * 3 * 3 + 128;                  // conv2
    expected += 4 * 512 * (128 * 15 * 15) + 4 * 512 * 512 + 8 * 512;  // lstm layer 0
    expected += 3 * (4 * 512 * 512 + 4 * 512 * 512 + 8 * 512);        // lstm layers 1-3
    expected += 25200 * 512 + 25200;                     // dense
    EXPECT_EQ(param_count(cfg), expected);
    EXPECT_EQ(param_count(cfg), 79344368u);
}

TEST(ParamCount, MirrorsActualTensorSizes) {
    for (const auto& cfg : {tiny_config(), ModelConfig{}}) {
        const auto params = ModelParams<float>::zeros_like(cfg);
        EXPECT_EQ(params.total_size(), param_count(cfg));
    }
}

TEST(InitParams, DeterministicAndBounded) {
    const auto cfg = tiny_config();
    const auto a = init_params<float>(cfg, 77);
    const auto b = init_params<float>(cfg, 77);
    const auto a_views = a.views();
    const auto b_views = b.views();
    for (std::size_t i = 0; i < a_views.size(); ++i)
        EXPECT_TRUE(*a_views[i].tensor == *b_views[i].tensor) << a_views[i].name;

    const auto c = init_params<float>(cfg, 78);
    EXPECT_FALSE(*a_views[0].tensor == *c.views()[0].tensor);

    // every value within (-k, k), k = 1/sqrt(fan_in)
    const double k1 = 1.0 / std::sqrt(static_cast<double>(cfg.fields * 9));
    for (float v : a.conv1_w.values()) {
        EXPECT_GT(v, -k1);
        EXPECT_LT(v, k1);
    }
}

TEST(InitParams, EmpiricalMeanNearZero) {
    ModelConfig cfg;  // full-size dense tensor gives a tight bound
    cfg.lstm_layers = 1;
    const auto p = init_params<double>(cfg, 5);
    const auto& w = p.dense_w;
    double mean = 0.0;
    for (double v : w.values()) mean += v;
    mean /= static_cast<double>(w.size());
    const double k = 1.0 / std::sqrt(static_cast<double>(cfg.lstm_hidden));
    // uniform(-k,k): std of the mean = k / sqrt(3 n)
    const double sigma_mean = k / std::sqrt(3.0 * static_cast<double>(w.size()));
    EXPECT_LT(std::abs(mean), 3.0 * sigma_mean);
}

TEST(ConvBlock, ZeroInputZeroBiasGivesZero) {
    auto cfg = tiny_config();
    auto params = init_params<double>(cfg, 3);
    params.conv1_b.fill(0.0);
    params.conv2_b.fill(0.0);
    Model<double> model(std::move(params));
    Tensor<double> frames({2, cfg.fields, cfg.height, cfg.width});
    const auto features = model.conv_block(frames);
    for (double v : features.values()) EXPECT_EQ(v, 0.0);
}

TEST(ConvBlock, DefaultShapesMatchArchitecture) {
    ModelConfig cfg;  // 7 fields, 60x60, conv 64/128
    auto params = ModelParams<float>::zeros_like(cfg);
    Model<float> model(std::move(params));
    Tensor<float> frames({1, 7, 60, 60});
    const auto features = model.conv_block(frames);
    const std::vector<std::size_t> expected{1, 128, 15, 15};
    EXPECT_EQ(features.shape(), expected);
}

TEST(ConvBlock, MatchesNaiveConvolutionOracle) {
    ModelConfig cfg;
    cfg.fields = 7;
    cfg.height = 8;
    cfg.width = 8;
    cfg.window = 1;
    cfg.conv1_out = 5;
    cfg.conv2_out = 6;
    cfg.lstm_hidden = 3;
    cfg.lstm_layers = 1;
    Rng rng(41);
    auto params = init_params<float>(cfg, 41);
    const Tensor<float> frame = random_tensor<float>({1, 7, 8, 8}, rng);

    Model<float> model(std::move(params));
    const auto features = model.conv_block(frame);

    std::vector<float> frame_vec(frame.values().begin(), frame.values().end());
    const auto expected = oracle::naive_conv_block(model.params(), frame_vec);
    ASSERT_EQ(features.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        ASSERT_NEAR(features[i], expected[i], 1e-6f);
}

TEST(ConvBlock, PositiveHomogeneityWithZeroBias) {
    auto cfg = tiny_config();
    auto params = init_params<float>(cfg, 8);
    params.conv1_b.fill(0.0f);
    params.conv2_b.fill(0.0f);
    Model<float> model(std::move(params));
    Rng rng(9);
    const auto frames = random_tensor<float>({1, cfg.fields, cfg.height, cfg.width}, rng);
    Tensor<float> scaled = frames;
    const float lambda = 2.5f;
    for (auto& v : scaled.values()) v *= lambda;
    const auto f1 = model.conv_block(frames);
    const auto f2 = model.conv_block(scaled);
    for (std::size_t i = 0; i < f1.size(); ++i)
        ASSERT_NEAR(f2[i], lambda * f1[i], 1e-4f * std::max(1.0f, std::abs(f1[i])));
}

TEST(LstmForward, AllZeroParamsGiveZeroOutput) {
    auto cfg = tiny_config();
    auto params = ModelParams<double>::zeros_like(cfg);
    Model<double> model(std::move(params));
    Tensor<double> x({1, cfg.window, cfg.fields, cfg.height, cfg.width});
    const auto pred = model.forward(x);
    for (double v : pred.values()) EXPECT_EQ(v, 0.0);
}

TEST(LstmForward, ClosedFormSingleStep) {
    // single layer, h = 1, zero input: c1 = sig(b_i)*tanh(b_g), h1 = sig(b_o)*tanh(c1)
    ModelConfig cfg;
    cfg.fields = 1;
    cfg.height = 4;
    cfg.width = 4;
    cfg.window = 1;
    cfg.conv1_out = 1;
    cfg.conv2_out = 1;
    cfg.lstm_hidden = 1;
    cfg.lstm_layers = 1;
    auto params = ModelParams<double>::zeros_like(cfg);
    const double b_i = 0.3, b_f = -0.2, b_g = 0.7, b_o = 0.5;
    params.lstm[0].b_ih[0] = b_i;
    params.lstm[0].b_ih[1] = b_f;
    params.lstm[0].b_ih[2] = b_g;
    params.lstm[0].b_ih[3] = b_o;
    // dense identity on the single hidden unit: weight 1, bias 0 for entry 0
    params.dense_w.at(0, 0) = 1.0;

    Model<double> model(std::move(params));
    Tensor<double> x({1, 1, 1, 4, 4});  // zero frame; conv weights zero -> zero features
    const auto pred = model.forward(x);

    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double c1 = sig(b_i) * std::tanh(b_g);
    const double h1 = sig(b_o) * std::tanh(c1);
    EXPECT_NEAR(pred[0], h1, 1e-15);
}

TEST(LstmForward, MatchesScalarRecurrenceOracle) {
    // 2 layers, h = 3, T = 4 against the step-by-step scalar oracle
    ModelConfig cfg;
    cfg.fields = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.window = 4;
    cfg.conv1_out = 2;
    cfg.conv2_out = 3;
    cfg.lstm_hidden = 3;
    cfg.lstm_layers = 2;
    Rng rng(55);
    auto params = init_params<float>(cfg, 56);
    Model<float> model(std::move(params));
    const auto x = random_tensor<float>({1, 4, 2, 8, 8}, rng);

    ForwardCache<float> cache;
    model.forward(x, &cache);

    // oracle features from the naive conv block per timestep
    std::vector<std::vector<double>> features;
    const std::size_t frame_n = 2 * 8 * 8;
    for (std::size_t t = 0; t < 4; ++t) {
        std::vector<float> frame(x.data() + t * frame_n, x.data() + (t + 1) * frame_n);
        auto feat = oracle::naive_conv_block(model.params(), frame);
        features.emplace_back(feat.begin(), feat.end());
    }
    const auto expected_hidden = oracle::naive_lstm_forward(model.params(), features);

    const float* h_final =
        cache.hidden.data() + ((cfg.lstm_layers - 1) * cfg.window + (cfg.window - 1)) * 1 * 3;
    for (std::size_t j = 0; j < 3; ++j)
        ASSERT_NEAR(h_final[j], expected_hidden[j], 1e-6);
}

TEST(Forward, OutputShapeIsBatchFieldsHeightWidth) {
    ModelConfig cfg;  // default: (1,7,60,60) per window
    auto params = ModelParams<float>::zeros_like(cfg);
    Model<float> model(std::move(params));
    Tensor<float> x({1, 5, 7, 60, 60});
    const auto pred = model.forward(x);
    const std::vector<std::size_t> expected{1, 7, 60, 60};
    EXPECT_EQ(pred.shape(), expected);
}

TEST(Forward, DeterministicAcrossCallsAndThreads) {
    auto cfg = tiny_config();
    Rng rng(61);
    auto params = init_params<float>(cfg, 62);
    Model<float> model(std::move(params));
    const auto x = random_tensor<float>({3, cfg.window, cfg.fields, cfg.height, cfg.width}, rng);
    const auto a = model.forward(x);
    const auto b = model.forward(x);
    EXPECT_TRUE(a == b);
    ThreadPool pool2(2), pool4(4);
    const auto c = model.forward(x, nullptr, &pool2);
    const auto d = model.forward(x, nullptr, &pool4);
    EXPECT_TRUE(a == c);
    EXPECT_TRUE(a == d);
}

TEST(Forward, ShapeContractOverRandomSmallConfigs) {
    Rng rng(71);
    for (int trial = 0; trial < 8; ++trial) {
        ModelConfig cfg;
        cfg.fields = 1 + rng.uniform_index(3);
        cfg.height = 4 * (1 + rng.uniform_index(3));
        cfg.width = cfg.height;
        cfg.window = 1 + rng.uniform_index(3);
        cfg.conv1_out = 1 + rng.uniform_index(4);
        cfg.conv2_out = 1 + rng.uniform_index(4);
        cfg.lstm_hidden = 1 + rng.uniform_index(6);
        cfg.lstm_layers = 1 + rng.uniform_index(3);
        auto params = init_params<float>(cfg, 100 + trial);
        Model<float> model(std::move(params));
        const std::size_t batch = 1 + rng.uniform_index(3);
        const auto x =
            random_tensor<float>({batch, cfg.window, cfg.fields, cfg.height, cfg.width}, rng);
        const auto pred = model.forward(x);
        const std::vector<std::size_t> expected{batch, cfg.fields, cfg.height, cfg.width};
        ASSERT_EQ(pred.shape(), expected);
    }
}

TEST(Forward, TinyConfigMatchesEndToEndNaiveOracle) {
    ModelConfig cfg;
    cfg.fields = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.window = 3;
    cfg.conv1_out = 3;
    cfg.conv2_out = 4;
    cfg.lstm_hidden = 4;
    cfg.lstm_layers = 1;
    Rng rng(81);
    auto params = init_params<float>(cfg, 82);
    Model<float> model(std::move(params));
    const auto x = random_tensor<float>({1, 3, 2, 8, 8}, rng);

    const auto pred = model.forward(x);

    std::vector<std::vector<float>> frames;
    const std::size_t frame_n = 2 * 8 * 8;
    for (std::size_t t = 0; t < 3; ++t)
        frames.emplace_back(x.data() + t * frame_n, x.data() + (t + 1) * frame_n);
    const auto expected = oracle::naive_forward(model.params(), frames);
    ASSERT_EQ(pred.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        ASSERT_NEAR(pred[i], expected[i], 1e-6);
}

TEST(MseLoss, TrivialAndOracleCases) {
    Tensor<float> a({2, 3}), b({2, 3});
    for (std::size_t i = 0; i < 6; ++i) a[i] = b[i] = static_cast<float>(i);
    EXPECT_DOUBLE_EQ(mse_loss(a, b), 0.0);
    for (std::size_t i = 0; i < 6; ++i) b[i] += 0.1f;
    EXPECT_NEAR(mse_loss(a, b), 0.01, 1e-7);

    // two-pass accumulation oracle on random tensors
    Rng rng(91);
    Tensor<double> p({40, 13}), q({40, 13});
    for (auto& v : p.values()) v = rng.uniform(-2, 2);
    for (auto& v : q.values()) v = rng.uniform(-2, 2);
    std::vector<double> sq;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        sq.push_back(d * d);
    }
    double total = 0.0;
    for (double v : sq) total += v;
    const double expected = total / static_cast<double>(sq.size());
    EXPECT_NEAR(mse_loss(p, q), expected, 1e-12 * std::max(1.0, expected));

    // symmetry and non-negativity
    EXPECT_DOUBLE_EQ(mse_loss(p, q), mse_loss(q, p));
    EXPECT_GE(mse_loss(p, q), 0.0);
    Tensor<double> mismatch({3});
    EXPECT_THROW(mse_loss(p, mismatch), std::invalid_argument);
}
