#pragma once

#include <cstddef>
#include <vector>

#include "mstm/core/thread_pool.hpp"

namespace mstm {

// C (M x N) += A (M x K) * B (K x N), all row-major, single accumulation
// pass per element in ascending-k order. Packed-panel blocking with a
// 4x16 micro tile; written so -O3 vectorizes the inner loop.
//
// trans_b: B is supplied as an (N x K) row-major matrix and used as its
// transpose. The K dimension is then contiguous in B, which is what the
// weight layouts in nn/ provide.

namespace gemm_detail {

constexpr std::size_t MR = 4;
constexpr std::size_t NR = 16;
constexpr std::size_t KC = 256;
constexpr std::size_t NC = 256;
constexpr std::size_t MC = 128;

template <typename T>
struct Scratch {
    std::vector<T> a_pack;  // KC x MC, tile-major (MR columns per tile)
    std::vector<T> b_pack;  // KC x NC, tile-major (NR columns per tile)
};

template <typename T>
Scratch<T>& scratch() {
    thread_local Scratch<T> s;
    if (s.a_pack.size() < KC * MC) s.a_pack.resize(KC * MC);
    if (s.b_pack.size() < KC * NC) s.b_pack.resize(KC * NC);
    return s;
}

// Bp tile layout: tile j holds kc rows of NR values at Bp[j*kc*NR + k*NR].
template <typename T>
inline void pack_b(const T* B, std::size_t ldb, bool trans_b, std::size_t k0, std::size_t kc,
                   std::size_t n0, std::size_t nc, T* Bp) {
    const std::size_t n_tiles = (nc + NR - 1) / NR;
    for (std::size_t jt = 0; jt < n_tiles; ++jt) {
        T* dst = Bp + jt * kc * NR;
        const std::size_t nj = jt * NR;
        const std::size_t width = (nc - nj) < NR ? (nc - nj) : NR;
        for (std::size_t k = 0; k < kc; ++k) {
            if (trans_b) {
                for (std::size_t j = 0; j < width; ++j)
                    dst[k * NR + j] = B[(n0 + nj + j) * ldb + (k0 + k)];
            } else {
                const T* src = B + (k0 + k) * ldb + n0 + nj;
                for (std::size_t j = 0; j < width; ++j) dst[k * NR + j] = src[j];
            }
            for (std::size_t j = width; j < NR; ++j) dst[k * NR + j] = T(0);
        }
    }
}

// Ap tile layout: tile i holds kc rows of MR values at Ap[i*kc*MR + k*MR].
template <typename T>
inline void pack_a(const T* A, std::size_t lda, std::size_t m0, std::size_t mc, std::size_t k0,
                   std::size_t kc, T* Ap) {
    const std::size_t m_tiles = (mc + MR - 1) / MR;
    for (std::size_t it = 0; it < m_tiles; ++it) {
        T* dst = Ap + it * kc * MR;
        const std::size_t mi = it * MR;
        const std::size_t height = (mc - mi) < MR ? (mc - mi) : MR;
        for (std::size_t k = 0; k < kc; ++k) {
            for (std::size_t i = 0; i < height; ++i)
                dst[k * MR + i] = A[(m0 + mi + i) * lda + (k0 + k)];
            for (std::size_t i = height; i < MR; ++i) dst[k * MR + i] = T(0);
        }
    }
}

// acc is an MR x NR row-major block, zeroed by the caller. Each element
// accumulates in ascending-k order, which the parallel wrapper relies on.
template <typename T>
inline void micro_kernel(std::size_t kc, const T* __restrict__ Ap, const T* __restrict__ Bp,
                         T* __restrict__ acc) {
    for (std::size_t k = 0; k < kc; ++k) {
        const T* a = Ap + k * MR;
        const T* b = Bp + k * NR;
        for (std::size_t i = 0; i < MR; ++i) {
            const T ai = a[i];
            for (std::size_t j = 0; j < NR; ++j) acc[i * NR + j] += ai * b[j];
        }
    }
}

#if defined(__GNUC__) || defined(__clang__)
// GCC refuses to auto-vectorize the accumulator block, so the float path
// spells out the 8-lane arithmetic with vector extensions.
typedef float vec8f __attribute__((vector_size(32), aligned(4)));

template <>
inline void micro_kernel<float>(std::size_t kc, const float* __restrict__ Ap,
                                const float* __restrict__ Bp, float* __restrict__ acc) {
    static_assert(NR == 16);
    vec8f block[MR][2] = {};
    for (std::size_t k = 0; k < kc; ++k) {
        const float* a = Ap + k * MR;
        const vec8f b0 = *reinterpret_cast<const vec8f*>(Bp + k * NR);
        const vec8f b1 = *reinterpret_cast<const vec8f*>(Bp + k * NR + 8);
        for (std::size_t i = 0; i < MR; ++i) {
            const vec8f ai = {a[i], a[i], a[i], a[i], a[i], a[i], a[i], a[i]};
            block[i][0] += ai * b0;
            block[i][1] += ai * b1;
        }
    }
    for (std::size_t i = 0; i < MR; ++i) {
        *reinterpret_cast<vec8f*>(acc + i * NR) = block[i][0];
        *reinterpret_cast<vec8f*>(acc + i * NR + 8) = block[i][1];
    }
}
#endif

template <typename T>
void gemm_block(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda,
                const T* B, std::size_t ldb, bool trans_b, T* C, std::size_t ldc) {
    auto& s = scratch<T>();
    for (std::size_t n0 = 0; n0 < N; n0 += NC) {
        const std::size_t nc = (N - n0) < NC ? (N - n0) : NC;
        for (std::size_t k0 = 0; k0 < K; k0 += KC) {
            const std::size_t kc = (K - k0) < KC ? (K - k0) : KC;
            pack_b(B, ldb, trans_b, k0, kc, n0, nc, s.b_pack.data());
            for (std::size_t m0 = 0; m0 < M; m0 += MC) {
                const std::size_t mc = (M - m0) < MC ? (M - m0) : MC;
                pack_a(A, lda, m0, mc, k0, kc, s.a_pack.data());
                const std::size_t m_tiles = (mc + MR - 1) / MR;
                const std::size_t n_tiles = (nc + NR - 1) / NR;
                for (std::size_t it = 0; it < m_tiles; ++it) {
                    for (std::size_t jt = 0; jt < n_tiles; ++jt) {
                        T acc[MR * NR] = {};
                        micro_kernel<T>(kc, s.a_pack.data() + it * kc * MR,
                                        s.b_pack.data() + jt * kc * NR, acc);
                        const std::size_t mi = m0 + it * MR;
                        const std::size_t nj = n0 + jt * NR;
                        const std::size_t height = (M - mi) < MR ? (M - mi) : MR;
                        const std::size_t width = (N - nj) < NR ? (N - nj) : NR;
                        for (std::size_t i = 0; i < height; ++i)
                            for (std::size_t j = 0; j < width; ++j)
                                C[(mi + i) * ldc + nj + j] += acc[i * NR + j];
                    }
                }
            }
        }
    }
}

}  // namespace gemm_detail

template <typename T>
void gemm(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
          std::size_t ldb, bool trans_b, T* C, std::size_t ldc) {
    if (M == 0 || N == 0 || K == 0) return;
    gemm_detail::gemm_block(M, N, K, A, lda, B, ldb, trans_b, C, ldc);
}

template <typename T>
void gemm(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, bool trans_b, T* C) {
    gemm(M, N, K, A, K, B, trans_b ? K : N, trans_b, C, N);
}

/// Column-partitioned parallel gemm. Every C element is computed by exactly
/// one iteration with a fixed accumulation order, so the result is identical
/// for any thread count.
template <typename T>
void gemm_par(ThreadPool& pool, std::size_t M, std::size_t N, std::size_t K, const T* A,
              std::size_t lda, const T* B, std::size_t ldb, bool trans_b, T* C, std::size_t ldc) {
    using namespace gemm_detail;
    const std::size_t want = pool.thread_count() * 2;
    std::size_t chunk = (N + want - 1) / want;
    chunk = ((chunk + NR - 1) / NR) * NR;
    if (chunk == 0) chunk = NR;
    const std::size_t n_chunks = (N + chunk - 1) / chunk;
    if (n_chunks <= 1 || M * N * K < (std::size_t{1} << 18)) {
        gemm(M, N, K, A, lda, B, ldb, trans_b, C, ldc);
        return;
    }
    pool.parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t n0 = c * chunk;
        const std::size_t nc = (N - n0) < chunk ? (N - n0) : chunk;
        const T* Bsub = trans_b ? B + n0 * ldb : B + n0;
        gemm(M, nc, K, A, lda, Bsub, ldb, trans_b, C + n0, ldc);
    });
}

/// out-of-place transpose: dst (cols x rows) from src (rows x cols).
template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

}  // namespace mstm
