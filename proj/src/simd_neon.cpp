// NEON variants for aarch64. Covers the same table as the AVX2 backend;
// double lanes are 2-wide so the win is smaller there.

#include "fdb/simd.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)
#define FDB_HAVE_NEON_BUILD 1
#include <arm_neon.h>

#include <cmath>
#endif

namespace fdb::simd {

#if FDB_HAVE_NEON_BUILD

namespace {

void add_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void fmadd_f(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t d = vld1q_f32(dst + i);
        d = vfmaq_f32(d, vld1q_f32(a + i), vld1q_f32(b + i));
        vst1q_f32(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(a[i], b[i], dst[i]);
}

void axpy_f(float* dst, float alpha, const float* x, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t d = vld1q_f32(dst + i);
        d = vfmaq_f32(d, va, vld1q_f32(x + i));
        vst1q_f32(dst + i, d);
    }
    for (; i < n; ++i) dst[i] = std::fma(alpha, x[i], dst[i]);
}

void scale_f(float* dst, float alpha, const float* x, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(va, vld1q_f32(x + i)));
    for (; i < n; ++i) dst[i] = alpha * x[i];
}

float dot_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_f(const float* a, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(a + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

float abs_diff_sum_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = vaddq_f32(acc, vabdq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void cmul_f(float* cr, float* ci, const float* ar, const float* ai, const float* br,
            const float* bi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t xr = vld1q_f32(ar + i);
        float32x4_t xi = vld1q_f32(ai + i);
        float32x4_t yr = vld1q_f32(br + i);
        float32x4_t yi = vld1q_f32(bi + i);
        vst1q_f32(cr + i, vfmsq_f32(vmulq_f32(xr, yr), xi, yi));
        vst1q_f32(ci + i, vfmaq_f32(vmulq_f32(xr, yi), xi, yr));
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
    for (; i + 4 <= n; i += 4) {
        float32x4_t xr = vld1q_f32(gr + i);
        float32x4_t xi = vld1q_f32(gi + i);
        float32x4_t yr = vld1q_f32(br + i);
        float32x4_t yi = vld1q_f32(bi + i);
        float32x4_t r = vld1q_f32(dr + i);
        float32x4_t m = vld1q_f32(di + i);
        r = vfmaq_f32(vfmaq_f32(r, xr, yr), xi, yi);
        m = vfmsq_f32(vfmaq_f32(m, xi, yr), xr, yi);
        vst1q_f32(dr + i, r);
        vst1q_f32(di + i, m);
    }
    for (; i < n; ++i) {
        dr[i] += gr[i] * br[i] + gi[i] * bi[i];
        di[i] += gi[i] * br[i] - gr[i] * bi[i];
    }
}

void lrelu_f(float* dst, const float* a, float slope, std::size_t n) {
    const float32x4_t vs = vdupq_n_f32(slope);
    const float32x4_t zero = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t x = vld1q_f32(a + i);
        uint32x4_t m = vcgtq_f32(x, zero);
        vst1q_f32(dst + i, vbslq_f32(m, x, vmulq_f32(vs, x)));
    }
    for (; i < n; ++i) dst[i] = a[i] > 0.f ? a[i] : slope * a[i];
}

void lrelu_bwd_f(float* dst, const float* x, const float* g, float slope, std::size_t n) {
    const float32x4_t vs = vdupq_n_f32(slope);
    const float32x4_t one = vdupq_n_f32(1.f);
    const float32x4_t zero = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t m = vcgtq_f32(vld1q_f32(x + i), zero);
        float32x4_t f = vbslq_f32(m, one, vs);
        float32x4_t d = vld1q_f32(dst + i);
        d = vfmaq_f32(d, vld1q_f32(g + i), f);
        vst1q_f32(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += g[i] * (x[i] > 0.f ? 1.f : slope);
}

}  // namespace

template <>
const KernelTable<float>* neon_table<float>() {
    static const KernelTable<float> t = {add_f,   sub_f,          mul_f,
                                         fmadd_f, axpy_f,         scale_f,
                                         dot_f,   sum_f,          abs_diff_sum_f,
                                         cmul_f,  cmul_conj_acc_f, lrelu_f,
                                         lrelu_bwd_f};
    return &t;
}

// No double-lane NEON table; scalar double is adequate for the oracle builds.
template <>
const KernelTable<double>* neon_table<double>() {
    return nullptr;
}

#else  // !FDB_HAVE_NEON_BUILD

template <>
const KernelTable<float>* neon_table<float>() {
    return nullptr;
}

template <>
const KernelTable<double>* neon_table<double>() {
    return nullptr;
}

#endif

}  // namespace fdb::simd
