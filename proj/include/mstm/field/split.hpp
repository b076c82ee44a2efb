#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mstm/core/rng.hpp"

namespace mstm {

/// Disjoint, covering train/val/test index lists over a sequence collection.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t rng_seed = 0;
};

/// 80/10/10 split; val and test get floor(n/10) each and the remainder goes
/// to train. Deterministic given the seed.
inline DatasetSplit split_dataset(std::size_t n_sequences, std::uint64_t seed) {
    if (n_sequences < 3) throw std::invalid_argument("split_dataset needs at least 3 sequences");
    std::vector<std::size_t> idx(n_sequences);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    const std::size_t n_val = n_sequences / 10;
    const std::size_t n_test = n_sequences / 10;
    const std::size_t n_train = n_sequences - n_val - n_test;

    DatasetSplit split;
    split.rng_seed = seed;
    split.train.assign(idx.begin(), idx.begin() + n_train);
    split.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    split.test.assign(idx.begin() + n_train + n_val, idx.end());
    return split;
}

}  // namespace mstm
