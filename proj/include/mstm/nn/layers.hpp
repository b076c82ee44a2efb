#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "mstm/core/gemm.hpp"
#include "mstm/core/tensor.hpp"

namespace mstm::nn {

// ---------------------------------------------------------------------------
// 3x3 same-padding convolution via im2col + GEMM
// ---------------------------------------------------------------------------

/// col has shape (C*9, H*W); row q = c*9 + kh*3 + kw holds the input shifted
/// by (kh-1, kw-1) with zero padding.
template <typename T>
void im2col_3x3(const T* x, std::size_t C, std::size_t H, std::size_t W, T* col) {
    const std::size_t hw = H * W;
    for (std::size_t c = 0; c < C; ++c) {
        const T* src_plane = x + c * hw;
        for (int kh = 0; kh < 3; ++kh) {
            for (int kw = 0; kw < 3; ++kw) {
                T* dst = col + (c * 9 + static_cast<std::size_t>(kh * 3 + kw)) * hw;
                const int di = kh - 1, dj = kw - 1;
                for (std::size_t i = 0; i < H; ++i) {
                    T* row = dst + i * W;
                    const long long si = static_cast<long long>(i) + di;
                    if (si < 0 || si >= static_cast<long long>(H)) {
                        std::memset(row, 0, W * sizeof(T));
                        continue;
                    }
                    const T* src = src_plane + static_cast<std::size_t>(si) * W;
                    const std::size_t j0 = dj < 0 ? 1 : 0;
                    const std::size_t j1 = dj > 0 ? W - 1 : W;
                    if (j0) row[0] = T(0);
                    if (dj > 0) row[W - 1] = T(0);
                    std::memcpy(row + j0, src + j0 + dj, (j1 - j0) * sizeof(T));
                }
            }
        }
    }
}

/// Transpose of im2col: accumulates col rows back into the (C, H, W) image.
template <typename T>
void col2im_3x3(const T* col, std::size_t C, std::size_t H, std::size_t W, T* x) {
    const std::size_t hw = H * W;
    for (std::size_t c = 0; c < C; ++c) {
        T* dst_plane = x + c * hw;
        for (int kh = 0; kh < 3; ++kh) {
            for (int kw = 0; kw < 3; ++kw) {
                const T* src = col + (c * 9 + static_cast<std::size_t>(kh * 3 + kw)) * hw;
                const int di = kh - 1, dj = kw - 1;
                for (std::size_t i = 0; i < H; ++i) {
                    const long long si = static_cast<long long>(i) + di;
                    if (si < 0 || si >= static_cast<long long>(H)) continue;
                    T* drow = dst_plane + static_cast<std::size_t>(si) * W;
                    const T* srow = src + i * W;
                    const std::size_t j0 = dj < 0 ? 1 : 0;
                    const std::size_t j1 = dj > 0 ? W - 1 : W;
                    for (std::size_t j = j0; j < j1; ++j)
                        drow[j + dj] += srow[j];
                }
            }
        }
    }
}

/// out (C_out, H*W) = weights (C_out, C_in*9) * col, then bias + ReLU.
template <typename T>
void conv_bias_relu(const T* weights, const T* bias, const T* col, std::size_t c_out,
                    std::size_t k, std::size_t hw, T* out) {
    std::memset(out, 0, c_out * hw * sizeof(T));
    gemm<T>(c_out, hw, k, weights, k, col, hw, false, out, hw);
    for (std::size_t co = 0; co < c_out; ++co) {
        T* row = out + co * hw;
        const T b = bias[co];
        for (std::size_t p = 0; p < hw; ++p) {
            const T v = row[p] + b;
            row[p] = v > T(0) ? v : T(0);
        }
    }
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2
// ---------------------------------------------------------------------------

/// idx records the winning slot (0..3 = 2*di + dj) per output element.
template <typename T>
void maxpool2_forward(const T* x, std::size_t C, std::size_t H, std::size_t W, T* out,
                      std::uint8_t* idx) {
    const std::size_t oh = H / 2, ow = W / 2;
    for (std::size_t c = 0; c < C; ++c) {
        const T* plane = x + c * H * W;
        T* optr = out + c * oh * ow;
        std::uint8_t* iptr = idx + c * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                const std::size_t base = (2 * i) * W + 2 * j;
                T best = plane[base];
                std::uint8_t slot = 0;
                const T candidates[3] = {plane[base + 1], plane[base + W], plane[base + W + 1]};
                for (std::uint8_t s = 0; s < 3; ++s) {
                    if (candidates[s] > best) {
                        best = candidates[s];
                        slot = static_cast<std::uint8_t>(s + 1);
                    }
                }
                optr[i * ow + j] = best;
                iptr[i * ow + j] = slot;
            }
        }
    }
}

template <typename T>
void maxpool2_backward(const T* dout, const std::uint8_t* idx, std::size_t C, std::size_t H,
                       std::size_t W, T* dx) {
    const std::size_t oh = H / 2, ow = W / 2;
    std::memset(dx, 0, C * H * W * sizeof(T));
    for (std::size_t c = 0; c < C; ++c) {
        const T* dptr = dout + c * oh * ow;
        const std::uint8_t* iptr = idx + c * oh * ow;
        T* plane = dx + c * H * W;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                const std::uint8_t slot = iptr[i * ow + j];
                const std::size_t base = (2 * i) * W + 2 * j;
                const std::size_t off = (slot & 2 ? W : 0) + (slot & 1 ? 1 : 0);
                plane[base + off] += dptr[i * ow + j];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// scalar nonlinearities
// ---------------------------------------------------------------------------

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

}  // namespace mstm::nn
