#pragma once

#include <string>

#include "fdb/tensor.hpp"

namespace fdb {

// Binary PNM (P5 grayscale / P6 RGB), 8- or 16-bit. Images are [C,H,W]
// tensors with values mapped linearly to [0,1]; 16-bit save/load is lossless
// for values already on the 16-bit grid.
template <typename T>
TensorT<T> load_image(const std::string& path);

template <typename T>
void save_image(const std::string& path, const TensorT<T>& img, int bits = 16);

}  // namespace fdb
