// AVX2 + FMA variants of the arithmetic kernels. This file is compiled with
// -mavx2 -mfma on x86-64; callers must check availability through the
// dispatch layer before using the table.

#include "fdb/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define FDB_HAVE_AVX2_BUILD 1
#include <immintrin.h>

#include <cmath>
#endif

namespace fdb::simd {

#if FDB_HAVE_AVX2_BUILD

namespace {

// ---------------------------------------------------------------- float ----

void add_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void fmadd_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_loadu_ps(dst + i);
        d = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), d);
        _mm256_storeu_ps(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(a[i], b[i], dst[i]);
}

void axpy_f(float* dst, float alpha, const float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_loadu_ps(dst + i);
        d = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), d);
        _mm256_storeu_ps(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(alpha, x[i], dst[i]);
}

void scale_f(float* dst, float alpha, const float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) dst[i] = alpha * x[i];
}

float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

float dot_f(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_f(const float* a, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

float abs_diff_sum_f(const float* a, const float* b, std::size_t n) {
    const __m256 mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, _mm256_and_ps(d, mask));
    }
    float s = hsum(acc);
    for (; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void cmul_f(float* cr, float* ci, const float* ar, const float* ai, const float* br,
            const float* bi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 xr = _mm256_loadu_ps(ar + i);
        __m256 xi = _mm256_loadu_ps(ai + i);
        __m256 yr = _mm256_loadu_ps(br + i);
        __m256 yi = _mm256_loadu_ps(bi + i);
        _mm256_storeu_ps(cr + i, _mm256_fmsub_ps(xr, yr, _mm256_mul_ps(xi, yi)));
        _mm256_storeu_ps(ci + i, _mm256_fmadd_ps(xr, yi, _mm256_mul_ps(xi, yr)));
    }
    for (; i < n; ++i) {
        const float r = ar[i] * br[i] - ai[i] * bi[i];
        const float m = ar[i] * bi[i] + ai[i] * br[i];
        cr[i] = r;
        ci[i] = m;
    }
}

void cmul_conj_acc_f(float* dr, float* di, const float* gr, const float* gi,
                     const float* br, const float* bi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 xr = _mm256_loadu_ps(gr + i);
        __m256 xi = _mm256_loadu_ps(gi + i);
        __m256 yr = _mm256_loadu_ps(br + i);
        __m256 yi = _mm256_loadu_ps(bi + i);
        __m256 r = _mm256_loadu_ps(dr + i);
        __m256 m = _mm256_loadu_ps(di + i);
        r = _mm256_add_ps(r, _mm256_fmadd_ps(xr, yr, _mm256_mul_ps(xi, yi)));
        m = _mm256_add_ps(m, _mm256_fmsub_ps(xi, yr, _mm256_mul_ps(xr, yi)));
        _mm256_storeu_ps(dr + i, r);
        _mm256_storeu_ps(di + i, m);
    }
    for (; i < n; ++i) {
        dr[i] += gr[i] * br[i] + gi[i] * bi[i];
        di[i] += gi[i] * br[i] - gr[i] * bi[i];
    }
}

void lrelu_f(float* dst, const float* a, float slope, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(slope);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 x = _mm256_loadu_ps(a + i);
        __m256 neg = _mm256_mul_ps(vs, x);
        __m256 m = _mm256_cmp_ps(x, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(dst + i, _mm256_blendv_ps(neg, x, m));
    }
    for (; i < n; ++i) dst[i] = a[i] > 0.f ? a[i] : slope * a[i];
}

void lrelu_bwd_f(float* dst, const float* x, const float* g, float slope, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(slope);
    const __m256 one = _mm256_set1_ps(1.f);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 xv = _mm256_loadu_ps(x + i);
        __m256 m = _mm256_cmp_ps(xv, zero, _CMP_GT_OQ);
        __m256 f = _mm256_blendv_ps(vs, one, m);
        __m256 d = _mm256_loadu_ps(dst + i);
        d = _mm256_fmadd_ps(_mm256_loadu_ps(g + i), f, d);
        _mm256_storeu_ps(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += g[i] * (x[i] > 0.f ? 1.f : slope);
}

// --------------------------------------------------------------- double ----

void add_d(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_d(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_d(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void fmadd_d(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_loadu_pd(dst + i);
        d = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), d);
        _mm256_storeu_pd(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(a[i], b[i], dst[i]);
}

void axpy_d(double* dst, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_loadu_pd(dst + i);
        d = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), d);
        _mm256_storeu_pd(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(alpha, x[i], dst[i]);
}

void scale_d(double* dst, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) dst[i] = alpha * x[i];
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_d(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_d(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

double abs_diff_sum_d(const double* a, const double* b, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_and_pd(d, mask));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void cmul_d(double* cr, double* ci, const double* ar, const double* ai, const double* br,
            const double* bi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xr = _mm256_loadu_pd(ar + i);
        __m256d xi = _mm256_loadu_pd(ai + i);
        __m256d yr = _mm256_loadu_pd(br + i);
        __m256d yi = _mm256_loadu_pd(bi + i);
        _mm256_storeu_pd(cr + i, _mm256_fmsub_pd(xr, yr, _mm256_mul_pd(xi, yi)));
        _mm256_storeu_pd(ci + i, _mm256_fmadd_pd(xr, yi, _mm256_mul_pd(xi, yr)));
    }
    for (; i < n; ++i) {
        const double r = ar[i] * br[i] - ai[i] * bi[i];
        const double m = ar[i] * bi[i] + ai[i] * br[i];
        cr[i] = r;
        ci[i] = m;
    }
}

void cmul_conj_acc_d(double* dr, double* di, const double* gr, const double* gi,
                     const double* br, const double* bi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xr = _mm256_loadu_pd(gr + i);
        __m256d xi = _mm256_loadu_pd(gi + i);
        __m256d yr = _mm256_loadu_pd(br + i);
        __m256d yi = _mm256_loadu_pd(bi + i);
        __m256d r = _mm256_loadu_pd(dr + i);
        __m256d m = _mm256_loadu_pd(di + i);
        r = _mm256_add_pd(r, _mm256_fmadd_pd(xr, yr, _mm256_mul_pd(xi, yi)));
        m = _mm256_add_pd(m, _mm256_fmsub_pd(xi, yr, _mm256_mul_pd(xr, yi)));
        _mm256_storeu_pd(dr + i, r);
        _mm256_storeu_pd(di + i, m);
    }
    for (; i < n; ++i) {
        dr[i] += gr[i] * br[i] + gi[i] * bi[i];
        di[i] += gi[i] * br[i] - gr[i] * bi[i];
    }
}

void lrelu_d(double* dst, const double* a, double slope, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(slope);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(a + i);
        __m256d neg = _mm256_mul_pd(vs, x);
        __m256d m = _mm256_cmp_pd(x, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dst + i, _mm256_blendv_pd(neg, x, m));
    }
    for (; i < n; ++i) dst[i] = a[i] > 0.0 ? a[i] : slope * a[i];
}

void lrelu_bwd_d(double* dst, const double* x, const double* g, double slope,
                 std::size_t n) {
    const __m256d vs = _mm256_set1_pd(slope);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d m = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        __m256d f = _mm256_blendv_pd(vs, one, m);
        __m256d d = _mm256_loadu_pd(dst + i);
        d = _mm256_fmadd_pd(_mm256_loadu_pd(g + i), f, d);
        _mm256_storeu_pd(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
}

}  // namespace

template <>
const KernelTable<float>* avx2_table<float>() {
    static const KernelTable<float> t = {add_f,   sub_f,          mul_f,
                                         fmadd_f, axpy_f,         scale_f,
                                         dot_f,   sum_f,          abs_diff_sum_f,
                                         cmul_f,  cmul_conj_acc_f, lrelu_f,
                                         lrelu_bwd_f};
    return &t;
}

template <>
const KernelTable<double>* avx2_table<double>() {
    static const KernelTable<double> t = {add_d,   sub_d,          mul_d,
                                          fmadd_d, axpy_d,         scale_d,
                                          dot_d,   sum_d,          abs_diff_sum_d,
                                          cmul_d,  cmul_conj_acc_d, lrelu_d,
                                          lrelu_bwd_d};
    return &t;
}

#else  // !FDB_HAVE_AVX2_BUILD

template <>
const KernelTable<float>* avx2_table<float>() {
    return nullptr;
}

template <>
const KernelTable<double>* avx2_table<double>() {
    return nullptr;
}

#endif

}  // namespace fdb::simd
