#pragma once

#include "fdb/tensor.hpp"

// Reference implementations written as plain loops straight from the
// definitions. They share no code with the fast paths they check and are
// not meant to be fast; tests and the `oracle` subcommand are the only
// callers.
namespace fdb::oracle {

// Direct O((HW)^2) 2D DFT of one real plane, unnormalized forward convention
// X[p,q] = sum_{m,n} x[m,n] * exp(-i*2*pi*(p*m/H + q*n/W)).
void naive_dft2_plane(const double* x, int h, int w, double* out_re, double* out_im);

// Circular (periodic) convolution of two H x W planes:
// y[i,j] = sum_{m,n} a[m,n] * b[(i-m) mod H, (j-n) mod W].
void circular_conv2d_plane(const double* a, const double* b, int h, int w, double* out);

// Six-nested-loop dense convolution, zero padding.
template <typename T>
TensorT<T> conv2d_naive(const TensorT<T>& input, const TensorT<T>& weight,
                        const TensorT<T>& bias, int stride, int pad);

// Per-channel loop convolution, zero padding, size preserving.
template <typename T>
TensorT<T> dwconv2d_naive(const TensorT<T>& input, const TensorT<T>& weight,
                          const TensorT<T>& bias, int pad);

// Quadruple-loop per-pixel blur: out[c,i,j] = sum_{u,v} field[i,j,u,v] *
// x_pad[c, i+u-r, j+v-r] with replicate padding, r = (k-1)/2.
// x is [C,H,W] (or [B,C,H,W] with B planes handled independently),
// field is [H,W,k,k].
template <typename T>
TensorT<T> reblur_naive(const TensorT<T>& x, const TensorT<T>& field);

// SSIM from the definition: Gaussian 11x11 sigma 1.5 window, valid positions
// only, C1=(0.01)^2, C2=(0.03)^2 at unit peak, mean over channels.
// a and b are [C,H,W] in [0,1].
double ssim_direct(const TensorT<double>& a, const TensorT<double>& b);

}  // namespace fdb::oracle
