#pragma once

#include "fdb/tensor.hpp"

namespace fdb::fft {

// Unnormalized forward 2D transform applied independently to each (batch,
// channel) plane over the two trailing axes. The inverse carries the 1/(H*W)
// factor so that ifft2(fft2(x)) == x.
template <typename T>
ComplexGridT<T> fft2(const TensorT<T>& x);

// Inverse transform, real part. If max_imag is non-null it receives the
// largest |imaginary| residue before it is dropped.
template <typename T>
TensorT<T> ifft2_real(const ComplexGridT<T>& X, T* max_imag = nullptr);

// Full complex inverse, for round-trip and symmetry tests.
template <typename T>
ComplexGridT<T> ifft2_complex(const ComplexGridT<T>& X);

template <typename T>
ComplexGridT<T> fft2_grid(const ComplexGridT<T>& x);

template <typename T>
ComplexGridT<T> cmul(const ComplexGridT<T>& a, const ComplexGridT<T>& b);

// In-place transform of a single H x W plane (row-major, stride W).
// sign = -1 forward, +1 inverse; both unnormalized.
template <typename T>
void transform_plane(T* re, T* im, int h, int w, int sign);

// Fault-injection hook: when set, inverse transforms run with the forward
// sign, which breaks the convolution theorem. Used by `oracle` to prove the
// suite can detect a corrupted convention.
bool& test_hook_flip_inverse_sign();

}  // namespace fdb::fft
