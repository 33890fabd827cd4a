#pragma once

#include <array>
#include <string>

#include "fdb/fim.hpp"
#include "fdb/params.hpp"
#include "fdb/tape.hpp"

namespace fdb {

// Three-scale encoder-decoder of Frequency Transformer Blocks with optional
// kernel-feature integration sites and a global residual to the input.
struct DeblurNetConfig {
    int in_channels = 3;
    int scales = 3;  // fixed; the pyramid is three-scale by construction
    std::array<int, 3> channels{32, 64, 128};
    int enc_ftb = 2;  // blocks per encoder scale (bottleneck included)
    int dec_ftb = 2;  // blocks per decoder scale
    int k = 13;       // kernel support of the prior
    int dhat = 32;    // embedded kernel feature channels
    bool use_prior = true;
    bool use_fim_encoder = true;
    bool use_fim_decoder = true;
    bool fim_residual = true;
    bool multiscale = true;  // off: integration only at the outermost scale
};

// One backbone block: frequency self-attention plus a spectral feed-forward,
// each behind a zero-initialized output conv and a residual add, so the block
// is the identity at initialization. Parameters under "<prefix>.".
template <typename T>
Var ftb_forward(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x, int channels);

// y [B,C,H,W] (spatial dims divisible by 4) -> x_hat of the same shape.
// pyramid must be present exactly when cfg.use_prior is set.
template <typename T>
Var deblur_forward(TapeT<T>& tape, BinderT<T>& P, const DeblurNetConfig& cfg, Var y,
                   const KernelPyramid* pyramid);

// Embeds kernel channels (invalid Var when the prior is off), builds the
// pyramid, runs the net.
template <typename T>
Var model_forward(TapeT<T>& tape, BinderT<T>& P, const DeblurNetConfig& cfg, Var y,
                  Var field_channels);

}  // namespace fdb
