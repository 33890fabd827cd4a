#pragma once

#include <string>

#include "fdb/params.hpp"
#include "fdb/tape.hpp"

namespace fdb::nn {

// Convolution with bias under <prefix>.w / <prefix>.b; same-padding for odd
// k at stride 1, halving at stride 2.
template <typename T>
Var conv(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x, int cin, int cout,
         int k, int stride = 1, bool zero_init = false) {
    Var w = P(prefix + ".w", Shape{cout, cin, k, k},
              zero_init ? Init::zeros : Init::fan_in, cin * k * k);
    Var b = P(prefix + ".b", Shape{cout}, Init::zeros);
    return tape.conv2d(x, w, b, stride, k / 2);
}

template <typename T>
Var dwconv(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x, int c, int k) {
    Var w = P(prefix + ".w", Shape{c, 1, k, k}, Init::fan_in, k * k);
    Var b = P(prefix + ".b", Shape{c}, Init::zeros);
    return tape.dwconv2d(x, w, b, k / 2);
}

template <typename T>
Var layer_norm(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x, int c) {
    Var g = P(prefix + ".g", Shape{c}, Init::ones);
    Var b = P(prefix + ".b", Shape{c}, Init::zeros);
    return tape.layer_norm(x, g, b, T(1e-5));
}

// Replicate-pads the bottom/right of [B,C,H,W] (or [C,H,W]) so both spatial
// dims are multiples of m.
template <typename T>
TensorT<T> pad_to_multiple(const TensorT<T>& x, int m);

// Drops bottom/right padding back to (h, w).
template <typename T>
TensorT<T> crop_spatial(const TensorT<T>& x, int h, int w);

}  // namespace fdb::nn
