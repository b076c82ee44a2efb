#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mstm {

/// Seeded generator with hand-rolled distributions so streams are identical
/// across standard libraries (std:: distributions are implementation-defined).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child stream, e.g. one per simulated sequence.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t mix = seed_mix_ ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        return Rng(mix);
    }

    static Rng forked(std::uint64_t seed, std::uint64_t stream) {
        Rng base(seed);
        return base.fork(stream);
    }

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_mix_ = engine_();  // consumed once; decorrelates fork streams
};

}  // namespace mstm
