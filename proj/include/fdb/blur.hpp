#pragma once

#include <string>

#include "fdb/tensor.hpp"

namespace fdb {

// Per-pixel k x k blur kernels, weights laid out [H,W,k,k]. After
// normalization every pixel's kernel is nonnegative and sums to 1.
template <typename T>
struct PixelKernelFieldT {
    int H = 0, W = 0, k = 0;
    TensorT<T> weights;

    T at(int i, int j, int u, int v) const {
        return weights[((static_cast<std::int64_t>(i) * W + j) * k + u) * k + v];
    }
    T& at(int i, int j, int u, int v) {
        return weights[((static_cast<std::int64_t>(i) * W + j) * k + u) * k + v];
    }
};

using KernelField32 = PixelKernelFieldT<float>;
using KernelField64 = PixelKernelFieldT<double>;

namespace blur {

// Throws ValidationError unless nonnegative and per-pixel sums are 1
// within 1e-5.
template <typename T>
void check_normalized(const PixelKernelFieldT<T>& field);

// x is [C,H,W]; replicate boundary. Validates the field.
template <typename T>
TensorT<T> reblur(const TensorT<T>& x, const PixelKernelFieldT<T>& field);

// Per-pixel softmax over the k*k axis.
template <typename T>
PixelKernelFieldT<T> normalize_kernels(const TensorT<T>& raw);

// Smoothly varying linear-motion kernels: angle and length ride a few
// low-frequency sinusoids, each pixel's kernel is a bilinearly rasterized
// line segment. Deterministic in (H,W,k,seed,max_len,smoothness).
template <typename T>
PixelKernelFieldT<T> synth_kernel_field(int H, int W, int k, std::uint64_t seed, T max_len,
                                        T smoothness);

// Center-delta field (the identity for reblur).
template <typename T>
PixelKernelFieldT<T> delta_field(int H, int W, int k);

// B'[i,j,u,v] = B[i, W-1-j, u, k-1-v]; satisfies
// reblur(flip(x), flip_field(B)) == flip(reblur(x, B)).
template <typename T>
PixelKernelFieldT<T> flip_horizontal_field(const PixelKernelFieldT<T>& field);

template <typename T>
TensorT<T> flip_horizontal_image(const TensorT<T>& x);

// [H,W,k,k] <-> [1,k*k,H,W] (channel u*k+v), the layout the nets use.
template <typename T>
TensorT<T> field_to_channels(const PixelKernelFieldT<T>& field);
template <typename T>
PixelKernelFieldT<T> channels_to_field(const TensorT<T>& ch);

// Tensor file [H,W,k,k] plus a text sidecar recording H, W, k, seed.
template <typename T>
void save_field(const std::string& path, const PixelKernelFieldT<T>& field, std::uint64_t seed);
template <typename T>
PixelKernelFieldT<T> load_field(const std::string& path);

}  // namespace blur
}  // namespace fdb
