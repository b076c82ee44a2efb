#include <gtest/gtest.h>

#include <filesystem>

#include "mstm/core/rng.hpp"
#include "mstm/field/container.hpp"
#include "mstm/field/norm.hpp"
#include "mstm/field/split.hpp"
#include "mstm/field/window.hpp"

using namespace mstm;
namespace fs = std::filesystem;

namespace {

Sequence make_sequence(std::size_t frames, std::uint64_t seed, std::size_t f = 7,
                       std::size_t h = 6, std::size_t w = 6) {
    Rng rng(seed);
    Sequence seq;
    seq.frame_interval = 0.25f;
    seq.params["seq_id"] = static_cast<double>(seed);
    for (std::size_t t = 0; t < frames; ++t) {
        FieldFrame frame(f, h, w);
        for (auto& v : frame.values.values()) v = static_cast<float>(rng.uniform(-2.0, 3.0));
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("mstm_test_" + name);
}

}  // namespace

TEST(NormStats, ConstantFieldGivesEqualExtrema) {
    Sequence seq = make_sequence(1, 1);
    for (auto& v : seq.frames[0].field(0)) v = 2.5f;
    const auto stats = compute_norm_stats(std::span<const Sequence>(&seq, 1));
    EXPECT_DOUBLE_EQ(stats.extrema[0].first, 2.5);
    EXPECT_DOUBLE_EQ(stats.extrema[0].second, 2.5);
}

TEST(NormStats, EnumeratedExtrema) {
    Sequence seq = make_sequence(2, 2);
    auto f4a = seq.frames[0].field(4);
    auto f4b = seq.frames[1].field(4);
    for (auto& v : f4a) v = 1.0f;
    for (auto& v : f4b) v = 2.0f;
    f4a[3] = 0.0f;
    f4b[7] = 3.0f;
    const auto stats = compute_norm_stats(std::span<const Sequence>(&seq, 1));
    EXPECT_DOUBLE_EQ(stats.extrema[4].first, 0.0);
    EXPECT_DOUBLE_EQ(stats.extrema[4].second, 3.0);
}

TEST(NormStats, MatchesBruteForceScanOnToyDataset) {
    std::vector<Sequence> dataset;
    for (std::uint64_t s = 0; s < 10; ++s) dataset.push_back(make_sequence(4, 100 + s));
    const auto stats = compute_norm_stats(dataset);

    // independent full scan that visits every cell exactly once
    const std::size_t f_count = dataset.front().frames.front().fields();
    std::vector<double> lo(f_count, 1e300), hi(f_count, -1e300);
    std::size_t visited = 0;
    for (const auto& seq : dataset)
        for (const auto& frame : seq.frames)
            for (std::size_t f = 0; f < f_count; ++f)
                for (float v : frame.field(f)) {
                    lo[f] = std::min(lo[f], static_cast<double>(v));
                    hi[f] = std::max(hi[f], static_cast<double>(v));
                    ++visited;
                }
    EXPECT_EQ(visited, 10u * 4u * f_count * 36u);
    for (std::size_t f = 0; f < f_count; ++f) {
        EXPECT_DOUBLE_EQ(stats.extrema[f].first, lo[f]);
        EXPECT_DOUBLE_EQ(stats.extrema[f].second, hi[f]);
    }
}

TEST(NormStats, EmptyTrainingSetThrows) {
    std::vector<Sequence> empty;
    EXPECT_THROW(compute_norm_stats(empty), std::invalid_argument);
}

TEST(Normalize, EndpointsMapToZeroAndOne) {
    Sequence seq = make_sequence(1, 3);
    const auto stats = compute_norm_stats(std::span<const Sequence>(&seq, 1));
    const FieldFrame norm = normalize(seq.frames[0], stats);
    for (std::size_t f = 0; f < seq.frames[0].fields(); ++f) {
        float lo = 1e30f, hi = -1e30f;
        for (float v : norm.field(f)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        EXPECT_NEAR(lo, 0.0f, 1e-6f);
        EXPECT_NEAR(hi, 1.0f, 1e-6f);
    }
}

TEST(Normalize, DegenerateFieldMapsToZeroAndBack) {
    Sequence seq = make_sequence(1, 4);
    for (auto& v : seq.frames[0].field(2)) v = 7.25f;
    const auto stats = compute_norm_stats(std::span<const Sequence>(&seq, 1));
    const FieldFrame norm = normalize(seq.frames[0], stats);
    for (float v : norm.field(2)) EXPECT_EQ(v, 0.0f);
    const FieldFrame back = denormalize(norm, stats);
    for (float v : back.field(2)) EXPECT_EQ(v, 7.25f);
}

TEST(Normalize, RoundTripIdentity) {
    Sequence seq = make_sequence(3, 5);
    const auto stats = compute_norm_stats(std::span<const Sequence>(&seq, 1));
    for (const auto& frame : seq.frames) {
        const FieldFrame back = denormalize(normalize(frame, stats), stats);
        for (std::size_t i = 0; i < frame.values.size(); ++i) {
            const float a = frame.values[i], b = back.values[i];
            EXPECT_NEAR(a, b, 1e-6f * std::max(1.0f, std::abs(a)));
        }
    }
    // the opposite composition on normalized data
    const FieldFrame norm = normalize(seq.frames[0], stats);
    const FieldFrame again = normalize(denormalize(norm, stats), stats);
    for (std::size_t i = 0; i < norm.values.size(); ++i)
        EXPECT_NEAR(norm.values[i], again.values[i], 1e-6f);
}

TEST(Normalize, ShapeMismatchThrows) {
    Sequence seq = make_sequence(1, 6);
    NormStats stats;
    stats.extrema.assign(3, {0.0, 1.0});
    EXPECT_THROW(normalize(seq.frames[0], stats), std::invalid_argument);
    EXPECT_THROW(denormalize(seq.frames[0], stats), std::invalid_argument);
}

TEST(Normalize, ValTestValuesMayLeaveUnitIntervalUnclipped) {
    Sequence train_seq = make_sequence(1, 7);
    for (auto& v : train_seq.frames[0].field(0)) v = 1.0f;
    train_seq.frames[0].field(0)[0] = 2.0f;  // extrema [1, 2]
    const auto stats = compute_norm_stats(std::span<const Sequence>(&train_seq, 1));
    FieldFrame outside(train_seq.frames[0].fields(), 6, 6);
    for (auto& v : outside.field(0)) v = 4.0f;  // beyond training max
    const FieldFrame norm = normalize(outside, stats);
    EXPECT_GT(norm.field(0)[0], 1.5f);  // not clipped
}

TEST(SplitDataset, ExactProportionsAndRemainder) {
    const auto s10 = split_dataset(10, 1);
    EXPECT_EQ(s10.train.size(), 8u);
    EXPECT_EQ(s10.val.size(), 1u);
    EXPECT_EQ(s10.test.size(), 1u);
    const auto s13 = split_dataset(13, 1);
    EXPECT_EQ(s13.train.size(), 11u);
    EXPECT_EQ(s13.val.size(), 1u);
    EXPECT_EQ(s13.test.size(), 1u);
}

TEST(SplitDataset, DeterministicGivenSeed) {
    const auto a = split_dataset(40, 9);
    const auto b = split_dataset(40, 9);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    EXPECT_EQ(a.test, b.test);
    const auto c = split_dataset(40, 10);
    EXPECT_NE(a.train, c.train);
}

TEST(SplitDataset, PartitionsTheIndexSet) {
    for (std::size_t n : {3u, 10u, 13u, 57u}) {
        const auto split = split_dataset(n, 1234);
        std::vector<bool> seen(n, false);
        for (auto list : {&split.train, &split.val, &split.test})
            for (std::size_t idx : *list) {
                ASSERT_LT(idx, n);
                ASSERT_FALSE(seen[idx]) << "index " << idx << " appears twice";
                seen[idx] = true;
            }
        for (bool s : seen) EXPECT_TRUE(s);
    }
}

TEST(SplitDataset, TooFewSequencesThrows) {
    EXPECT_THROW(split_dataset(2, 0), std::invalid_argument);
}

TEST(WindowSamples, CountsAndIndexing) {
    const Sequence six = make_sequence(6, 11);
    const auto one = window_samples(six, 5);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].target, &six.frames[5]);

    const Sequence sixty = make_sequence(60, 12);
    const auto many = window_samples(sixty, 5);
    EXPECT_EQ(many.size(), 55u);
    // sample 0's target is frames[5] bitwise
    EXPECT_TRUE(many[0].target->values == sixty.frames[5].values);
    // sample k inputs are frames[k..k+5)
    for (std::size_t t = 0; t < 5; ++t)
        EXPECT_EQ(&many[7].inputs[t], &sixty.frames[7 + t]);
}

TEST(WindowSamples, TooShortThrows) {
    const Sequence five = make_sequence(5, 13);
    EXPECT_THROW(window_samples(five, 5), std::invalid_argument);
}

TEST(Container, EmptyListRoundTrips) {
    const auto path = temp_file("empty.mstm");
    write_container(path, std::span<const Sequence>{});
    const auto back = read_container(path);
    EXPECT_TRUE(back.empty());
    fs::remove(path);
}

TEST(Container, FileSizeMatchesLayoutArithmetic) {
    Sequence seq = make_sequence(2, 20, 7, 60, 60);
    seq.params.clear();
    const auto path = temp_file("size.mstm");
    write_container(path, std::span<const Sequence>(&seq, 1));
    const auto size = fs::file_size(path);
    // header (4+1+4) + per-seq header (4*4 + 4 + 4) + payload 2*7*60*60*4
    const std::uintmax_t expected = 9 + 24 + 2ull * 7 * 60 * 60 * 4;
    EXPECT_EQ(size, expected);
    fs::remove(path);
}

TEST(Container, RoundTripIsBitExact) {
    std::vector<Sequence> dataset;
    for (std::uint64_t s = 0; s < 10; ++s) dataset.push_back(make_sequence(3, 40 + s));
    const auto path = temp_file("roundtrip.mstm");
    write_container(path, dataset);
    const auto first_hash = file_crc32(path);
    const auto back = read_container(path);
    ASSERT_EQ(back.size(), dataset.size());
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        ASSERT_EQ(back[s].frames.size(), dataset[s].frames.size());
        EXPECT_EQ(back[s].params, dataset[s].params);
        EXPECT_EQ(back[s].frame_interval, dataset[s].frame_interval);
        for (std::size_t t = 0; t < dataset[s].frames.size(); ++t)
            ASSERT_TRUE(back[s].frames[t].values == dataset[s].frames[t].values);
    }
    // write what we read: byte-identical file
    const auto path2 = temp_file("roundtrip2.mstm");
    write_container(path2, back);
    EXPECT_EQ(file_crc32(path2), first_hash);
    fs::remove(path);
    fs::remove(path2);
}

TEST(Container, PropertyRandomPayloadsRoundTrip) {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t f = 1 + rng.uniform_index(4);
        const std::size_t h = 1 + rng.uniform_index(8);
        const std::size_t w = 1 + rng.uniform_index(8);
        const std::size_t t_len = 1 + rng.uniform_index(5);
        Sequence seq;
        seq.frame_interval = static_cast<float>(rng.uniform(0.01, 2.0));
        seq.params["p"] = rng.uniform(-5, 5);
        for (std::size_t t = 0; t < t_len; ++t) {
            FieldFrame frame(f, h, w);
            for (auto& v : frame.values.values())
                v = static_cast<float>(rng.uniform(-1e6, 1e6));
            seq.frames.push_back(std::move(frame));
        }
        const auto path = temp_file("prop.mstm");
        write_container(path, std::span<const Sequence>(&seq, 1));
        const auto back = read_container(path);
        ASSERT_EQ(back.size(), 1u);
        for (std::size_t t = 0; t < t_len; ++t)
            ASSERT_TRUE(back[0].frames[t].values == seq.frames[t].values);
        fs::remove(path);
    }
}

TEST(Container, DistinctErrorCodes) {
    const auto path = temp_file("bad.mstm");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE";
    }
    try {
        read_container(path);
        FAIL() << "expected bad magic";
    } catch (const ContainerError& e) {
        EXPECT_EQ(e.code(), ContainerErrorCode::bad_magic);
    }
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "MSTM";
        os.put(0x01);
        put_u32(os, 1);  // one sequence promised, but no payload
    }
    try {
        read_container(path);
        FAIL() << "expected truncation";
    } catch (const ContainerError& e) {
        EXPECT_EQ(e.code(), ContainerErrorCode::truncated);
    }
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "MSTM";
        os.put(0x01);
        put_u32(os, 1);
        put_u32(os, 0);  // T = 0: implausible shape
        put_u32(os, 7);
        put_u32(os, 4);
        put_u32(os, 4);
        put_f32(os, 1.0f);
        put_u32(os, 0);
    }
    try {
        read_container(path);
        FAIL() << "expected shape error";
    } catch (const ContainerError& e) {
        EXPECT_EQ(e.code(), ContainerErrorCode::shape_inconsistent);
    }
    fs::remove(path);
}

TEST(Container, NormStatsSidecarRoundTrips) {
    NormStats stats;
    stats.extrema = {{-1.5, 2.5}, {0.0, 0.0}, {3.0, 9.0}};
    const auto path = temp_file("stats.mstn");
    write_norm_stats(path, stats);
    const auto back = read_norm_stats(path);
    EXPECT_EQ(back.extrema, stats.extrema);
    fs::remove(path);
}
