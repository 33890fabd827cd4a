#pragma once

#include <iosfwd>
#include <string>

#include "fdb/tensor.hpp"

namespace fdb {

// Portable tensor file: magic "FDT1", u32 LE rank, u32 LE dims, u8 precision
// code (4 = 32-bit, 8 = 64-bit), raw little-endian scalars.
template <typename T>
void write_tensor(std::ostream& os, const TensorT<T>& t);

// Reads any precision and converts to T.
template <typename T>
TensorT<T> read_tensor(std::istream& is);

template <typename T>
void save_tensor_file(const std::string& path, const TensorT<T>& t);

template <typename T>
TensorT<T> load_tensor_file(const std::string& path);

// Precision code stored in a tensor file without consuming the stream
// position permanently (peeks header then rewinds to the start).
int peek_tensor_precision(std::istream& is);

}  // namespace fdb
