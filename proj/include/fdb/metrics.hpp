#pragma once

#include "fdb/tensor.hpp"

namespace fdb {

// 10*log10(peak^2 / MSE) over all elements, capped at 100 dB when MSE = 0.
template <typename T>
double psnr(const TensorT<T>& a, const TensorT<T>& b, double peak = 1.0);

// Single-scale SSIM: Gaussian 11x11 sigma 1.5 window, C1=(0.01)^2,
// C2=(0.03)^2 at unit peak, mean over channels and valid window positions.
// Images are [C,H,W] with H, W >= 11.
template <typename T>
double ssim(const TensorT<T>& a, const TensorT<T>& b);

}  // namespace fdb
