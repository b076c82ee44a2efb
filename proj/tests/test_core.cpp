#include <gtest/gtest.h>

#include "mstm/core/bytes.hpp"
#include "mstm/core/gemm.hpp"
#include "mstm/core/rng.hpp"
#include "mstm/core/tensor.hpp"
#include "mstm/core/thread_pool.hpp"
#include "mstm/util/config_file.hpp"
#include "oracles/naive_nn.hpp"

using namespace mstm;

TEST(Crc32, KnownVector) {
    // "123456789" -> 0xCBF43926 is the standard check value for CRC-32/IEEE
    EXPECT_EQ(Crc32::of("123456789", 9), 0xCBF43926u);
    EXPECT_EQ(Crc32::of("", 0), 0x00000000u);
}

TEST(Rng, DeterministicStreams) {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    Rng c(123), d(124);
    EXPECT_NE(c.next_u64(), d.next_u64());
}

TEST(Rng, UniformInRange) {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(2.0, 3.0);
        EXPECT_GE(v, 2.0);
        EXPECT_LT(v, 3.0);
    }
}

TEST(Rng, ForkIndependence) {
    Rng base(5);
    Rng f0 = Rng::forked(5, 0);
    Rng f1 = Rng::forked(5, 1);
    EXPECT_NE(f0.next_u64(), f1.next_u64());
    // forks are reproducible
    Rng g0 = Rng::forked(5, 0);
    Rng f0b = Rng::forked(5, 0);
    EXPECT_EQ(g0.next_u64(), f0b.next_u64());
}

TEST(Gemm, MatchesNaiveOnFloat) {
    Rng rng(11);
    for (auto [m, n, k] : {std::array<std::size_t, 3>{3, 5, 7},
                           std::array<std::size_t, 3>{17, 33, 65},
                           std::array<std::size_t, 3>{64, 300, 129},
                           std::array<std::size_t, 3>{1, 16, 300}}) {
        std::vector<float> a(m * k), b(k * n), c(m * n, 0.f), ref(m * n, 0.f);
        for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
        for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
        gemm<float>(m, n, k, a.data(), k, b.data(), n, false, c.data(), n);
        oracle::naive_gemm<float>(m, n, k, a.data(), b.data(), false, ref.data());
        for (std::size_t i = 0; i < c.size(); ++i)
            ASSERT_NEAR(c[i], ref[i], 1e-4f * static_cast<float>(k));
    }
}

TEST(Gemm, TransposedBMatchesNaive) {
    Rng rng(13);
    const std::size_t m = 9, n = 21, k = 40;
    std::vector<double> a(m * k), bt(n * k), c(m * n, 0.0), ref(m * n, 0.0);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : bt) v = rng.uniform(-1, 1);
    gemm<double>(m, n, k, a.data(), k, bt.data(), k, true, c.data(), n);
    oracle::naive_gemm<double>(m, n, k, a.data(), bt.data(), true, ref.data());
    for (std::size_t i = 0; i < c.size(); ++i) ASSERT_NEAR(c[i], ref[i], 1e-12);
}

TEST(Gemm, AccumulatesIntoC) {
    const std::size_t m = 2, n = 2, k = 2;
    std::vector<double> a{1, 2, 3, 4}, b{1, 0, 0, 1}, c{10, 10, 10, 10};
    gemm<double>(m, n, k, a.data(), k, b.data(), n, false, c.data(), n);
    EXPECT_DOUBLE_EQ(c[0], 11.0);
    EXPECT_DOUBLE_EQ(c[1], 12.0);
    EXPECT_DOUBLE_EQ(c[2], 13.0);
    EXPECT_DOUBLE_EQ(c[3], 14.0);
}

TEST(Gemm, ParallelResultIndependentOfThreadCount) {
    Rng rng(17);
    const std::size_t m = 32, n = 512, k = 700;
    std::vector<float> a(m * k), b(k * n);
    for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
    std::vector<std::vector<float>> results;
    for (std::size_t threads : {1u, 2u, 4u}) {
        ThreadPool pool(threads);
        std::vector<float> c(m * n, 0.f);
        gemm_par<float>(pool, m, n, k, a.data(), k, b.data(), n, false, c.data(), n);
        results.push_back(std::move(c));
    }
    EXPECT_EQ(results[0], results[1]);
    EXPECT_EQ(results[0], results[2]);
}

TEST(ThreadPool, RunsEveryIterationOnce) {
    ThreadPool pool(4);
    std::vector<std::atomic<int>> hits(1000);
    pool.parallel_for(1000, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ThreadPool, BackToBackJobsDoNotOverlap) {
    ThreadPool pool(3);
    std::vector<double> data(64, 0.0);
    for (int round = 0; round < 50; ++round)
        pool.parallel_for(64, [&](std::size_t i) { data[i] += 1.0; });
    for (double v : data) EXPECT_DOUBLE_EQ(v, 50.0);
}

TEST(Tensor, ShapeAndIndexing) {
    Tensor<float> t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    t.at(1, 2, 3) = 5.0f;
    EXPECT_EQ(t[23], 5.0f);
    EXPECT_TRUE(t.all_finite());
    t[0] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
}

TEST(ConfigFile, ParsesKeysCommentsAndTypes) {
    const auto cfg = ConfigFile::parse_text("a = 1.5 # comment\n# full comment\nname = toy\nn=7\n");
    EXPECT_DOUBLE_EQ(cfg.get_double("a", 0), 1.5);
    EXPECT_EQ(cfg.get_string("name", ""), "toy");
    EXPECT_EQ(cfg.get_u64("n", 0), 7u);
    EXPECT_NO_THROW(cfg.reject_unknown_keys());
}

TEST(ConfigFile, UnknownKeysAreHardErrors) {
    const auto cfg = ConfigFile::parse_text("known = 1\ntypo_key = 2\n");
    cfg.get_double("known", 0);
    EXPECT_THROW(cfg.reject_unknown_keys(), std::invalid_argument);
}

TEST(ConfigFile, DuplicateAndMalformedLinesFail) {
    EXPECT_THROW(ConfigFile::parse_text("a = 1\na = 2\n"), std::invalid_argument);
    EXPECT_THROW(ConfigFile::parse_text("just words\n"), std::invalid_argument);
    const auto cfg = ConfigFile::parse_text("x = abc\n");
    EXPECT_THROW(cfg.get_double("x", 0), std::invalid_argument);
}

TEST(Bytes, LittleEndianRoundTrip) {
    std::ostringstream os(std::ios::binary);
    put_u32(os, 0x01020304u);
    put_f64(os, -3.5);
    const std::string s = os.str();
    EXPECT_EQ(static_cast<unsigned char>(s[0]), 0x04);  // little-endian
    std::istringstream is(s, std::ios::binary);
    std::uint32_t u;
    double d;
    EXPECT_TRUE(get_u32(is, u));
    EXPECT_TRUE(get_f64(is, d));
    EXPECT_EQ(u, 0x01020304u);
    EXPECT_DOUBLE_EQ(d, -3.5);
}
