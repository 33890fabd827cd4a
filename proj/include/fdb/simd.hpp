#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fdb::simd {

// Flat arithmetic kernels behind the tensor ops. Every entry has a scalar
// reference implementation; vector backends must agree with it (elementwise
// kernels bit-exactly, reductions within accumulation-order tolerance).
template <typename T>
struct KernelTable {
    void (*add)(T* dst, const T* a, const T* b, std::size_t n);
    void (*sub)(T* dst, const T* a, const T* b, std::size_t n);
    void (*mul)(T* dst, const T* a, const T* b, std::size_t n);
    // dst += a * b
    void (*fmadd)(T* dst, const T* a, const T* b, std::size_t n);
    // dst += alpha * x
    void (*axpy)(T* dst, T alpha, const T* x, std::size_t n);
    // dst = alpha * x
    void (*scale)(T* dst, T alpha, const T* x, std::size_t n);
    T (*dot)(const T* a, const T* b, std::size_t n);
    T (*sum)(const T* a, std::size_t n);
    // sum |a - b|
    T (*abs_diff_sum)(const T* a, const T* b, std::size_t n);
    // (cr + i*ci) = (ar + i*ai) * (br + i*bi), elementwise
    void (*cmul)(T* cr, T* ci, const T* ar, const T* ai, const T* br, const T* bi,
                 std::size_t n);
    // (dr + i*di) += (gr + i*gi) * conj(br + i*bi), elementwise
    void (*cmul_conj_acc)(T* dr, T* di, const T* gr, const T* gi, const T* br,
                          const T* bi, std::size_t n);
    // dst = a > 0 ? a : slope * a
    void (*lrelu)(T* dst, const T* a, T slope, std::size_t n);
    // dst += g * (x > 0 ? 1 : slope)
    void (*lrelu_bwd)(T* dst, const T* x, const T* g, T slope, std::size_t n);
};

template <typename T>
const KernelTable<T>& scalar_table();

// Null when the backend is not compiled in or the CPU lacks the feature.
template <typename T>
const KernelTable<T>* avx2_table();
template <typename T>
const KernelTable<T>* neon_table();

// Runtime-selected table (best available backend unless forced).
template <typename T>
const KernelTable<T>& active();

const std::string& active_backend();

// Backends usable on this machine, "scalar" always first.
std::vector<std::string> available_backends();

// Force "scalar" / "avx2" / "neon", or "auto" to restore the default pick;
// throws ParamError if unavailable. Intended for the equivalence tests and
// the --simd flag, not for concurrent use.
void force_backend(const std::string& name);

}  // namespace fdb::simd
