#pragma once

#include "fdb/blur.hpp"
#include "fdb/params.hpp"
#include "fdb/tape.hpp"

namespace fdb {

// Small U-Net predicting a per-pixel kernel field from a blurry image:
// stride-2 conv down, nearest-neighbor + conv up, skip concatenation,
// leaky-rectifier slope 0.1, softmax head over the k*k kernel axis.
struct KEConfig {
    int levels = 3;  // resolution scales; levels-1 downsamplings
    int width = 32;  // channels at the top scale, doubled per level
    int k = 13;      // kernel support
    int in_channels = 3;
};

// y [B,C,H,W] -> normalized kernel channels [B,k*k,H,W]. H and W must be
// divisible by 2^(levels-1). Parameters live under "ke.".
template <typename T>
Var ke_forward(TapeT<T>& tape, BinderT<T>& P, const KEConfig& cfg, Var y);

// Inference wrapper for a single [C,H,W] image: replicate-pads to the
// required multiple, runs the net on a scratch tape, crops back.
template <typename T>
PixelKernelFieldT<T> estimate_kernels(ParamStoreT<T>& store, const KEConfig& cfg,
                                            const TensorT<T>& y);

}  // namespace fdb
