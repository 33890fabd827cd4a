#pragma once

#include <algorithm>

#include "fdb/tensor.hpp"

namespace fdb::detail {

// [B,C,H,W] -> [B,C,H+2p,W+2p]
template <typename T>
TensorT<T> pad_zero(const TensorT<T>& x, int p) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    TensorT<T> out(Shape{B, C, H + 2 * p, W + 2 * p});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                std::copy_n(&x.at4(b, c, i, 0), W, &out.at4(b, c, i + p, p));
    return out;
}

template <typename T>
TensorT<T> pad_replicate(const TensorT<T>& x, int p) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    TensorT<T> out(Shape{B, C, H + 2 * p, W + 2 * p});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H + 2 * p; ++i) {
                const int si = std::clamp(i - p, 0, H - 1);
                for (int j = 0; j < W + 2 * p; ++j)
                    out.at4(b, c, i, j) = x.at4(b, c, si, std::clamp(j - p, 0, W - 1));
            }
    return out;
}

// Adjoint of pad_zero: add the interior of gp into gx.
template <typename T>
void unpad_zero_acc(const TensorT<T>& gp, int p, TensorT<T>& gx) {
    const int B = gx.dim(0), C = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) gx.at4(b, c, i, j) += gp.at4(b, c, i + p, j + p);
}

// Adjoint of pad_replicate: every padded cell folds back onto the edge cell
// it was copied from.
template <typename T>
void unpad_replicate_acc(const TensorT<T>& gp, int p, TensorT<T>& gx) {
    const int B = gx.dim(0), C = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H + 2 * p; ++i) {
                const int si = std::clamp(i - p, 0, H - 1);
                for (int j = 0; j < W + 2 * p; ++j)
                    gx.at4(b, c, si, std::clamp(j - p, 0, W - 1)) += gp.at4(b, c, i, j);
            }
}

}  // namespace fdb::detail
