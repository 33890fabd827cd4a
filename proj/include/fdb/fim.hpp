#pragma once

#include <string>

#include "fdb/params.hpp"
#include "fdb/tape.hpp"

namespace fdb {

// Frequency integration: kernel features are fused into image features by an
// attention-style product computed in the frequency domain, added back
// through a zero-initialized output conv so the block starts as the identity.
struct FIMConfig {
    int channels = 32;     // image feature channels at the site (also latent width)
    int dhat = 32;         // embedded kernel feature channels
    bool residual = true;  // additive fusion; off reproduces the ablation row
};

// Kernel features at full, half, quarter resolution.
struct KernelPyramid {
    Var b1, b2, b3;
};

struct QKV {
    Var q, k, v;
};

// field channels [B,k*k,H,W] -> [B,dhat,H,W] via one 1x1 conv under
// "<prefix>.embed".
template <typename T>
Var embed_kernel_features(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var channels,
                          int k2, int dhat);

// b2 = avg_pool2(b1), b3 = avg_pool2(b2); spatial dims must divide by 4.
template <typename T>
KernelPyramid build_pyramid(TapeT<T>& tape, Var b1);

// Q from x_in, K and V from b_in, each a 1x1 conv into the latent width
// followed by a 3x3 depth-wise conv.
template <typename T>
QKV project_qkv(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x_in, Var b_in,
                int c_img, int c_ker, int latent);

// Real part of the inverse transform of the spectrum product: circular
// convolution of q and k. With a spatial delta as q this equals k exactly.
template <typename T>
Var fa_pre_norm(TapeT<T>& tape, Var q, Var k);

// Layer-normalized fa_pre_norm gated by v.
template <typename T>
Var frequency_attention(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var q, Var k,
                        Var v, int latent);

// Full block: project, attend, zero-initialized output conv, optional
// residual add of x_in.
template <typename T>
Var fim_forward(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, const FIMConfig& cfg,
                Var x_in, Var b_in);

}  // namespace fdb
