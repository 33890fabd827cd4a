#include "fdb/simd.hpp"

#include <cmath>

namespace fdb::simd {
namespace {

template <typename T>
void add_k(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub_k(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul_k(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void fmadd_k(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

template <typename T>
void axpy_k(T* dst, T alpha, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += alpha * x[i];
}

template <typename T>
void scale_k(T* dst, T alpha, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * x[i];
}

template <typename T>
T dot_k(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
T sum_k(const T* a, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

template <typename T>
T abs_diff_sum_k(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

template <typename T>
void cmul_k(T* cr, T* ci, const T* ar, const T* ai, const T* br, const T* bi,
            std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const T r = ar[i] * br[i] - ai[i] * bi[i];
        const T m = ar[i] * bi[i] + ai[i] * br[i];
        cr[i] = r;
        ci[i] = m;
    }
}

template <typename T>
void cmul_conj_acc_k(T* dr, T* di, const T* gr, const T* gi, const T* br,
                     const T* bi, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dr[i] += gr[i] * br[i] + gi[i] * bi[i];
        di[i] += gi[i] * br[i] - gr[i] * bi[i];
    }
}

template <typename T>
void lrelu_k(T* dst, const T* a, T slope, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] > T(0) ? a[i] : slope * a[i];
}

template <typename T>
void lrelu_bwd_k(T* dst, const T* x, const T* g, T slope, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i] * (x[i] > T(0) ? T(1) : slope);
}

template <typename T>
KernelTable<T> make_table() {
    KernelTable<T> t;
    t.add = add_k<T>;
    t.sub = sub_k<T>;
    t.mul = mul_k<T>;
    t.fmadd = fmadd_k<T>;
    t.axpy = axpy_k<T>;
    t.scale = scale_k<T>;
    t.dot = dot_k<T>;
    t.sum = sum_k<T>;
    t.abs_diff_sum = abs_diff_sum_k<T>;
    t.cmul = cmul_k<T>;
    t.cmul_conj_acc = cmul_conj_acc_k<T>;
    t.lrelu = lrelu_k<T>;
    t.lrelu_bwd = lrelu_bwd_k<T>;
    return t;
}

}  // namespace

template <>
const KernelTable<float>& scalar_table<float>() {
    static const KernelTable<float> t = make_table<float>();
    return t;
}

template <>
const KernelTable<double>& scalar_table<double>() {
    static const KernelTable<double> t = make_table<double>();
    return t;
}

}  // namespace fdb::simd
