#include "fdb/fft.hpp"

#include <cmath>
#include <unordered_map>
#include <utility>

#include "fdb/simd.hpp"

namespace fdb::fft {
namespace {

constexpr double kTau = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Per-length tables. Radix-2 lengths carry stage twiddles and a bit-reversal
// permutation; general lengths carry the n-th roots of unity for the O(n^2)
// fallback. Cached thread-locally so concurrent tapes never contend.
template <typename T>
struct Plan {
    int n = 0;
    bool pow2 = false;
    std::vector<int> bitrev;
    std::vector<T> tw_re, tw_im;    // radix-2: concatenated per-stage tables (forward sign)
    std::vector<T> root_re, root_im;  // general: e^{-i tau m / n}, m in [0, n)
};

template <typename T>
const Plan<T>& plan_for(int n) {
    thread_local std::unordered_map<int, Plan<T>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Plan<T> p;
    p.n = n;
    p.pow2 = is_pow2(n);
    if (p.pow2) {
        p.bitrev.resize(static_cast<std::size_t>(n));
        int bits = 0;
        while ((1 << bits) < n) ++bits;
        for (int i = 0; i < n; ++i) {
            int r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (1 << b)) r |= 1 << (bits - 1 - b);
            p.bitrev[static_cast<std::size_t>(i)] = r;
        }
        for (int len = 2; len <= n; len <<= 1) {
            const int half = len / 2;
            for (int j = 0; j < half; ++j) {
                const double ang = -kTau * j / len;
                p.tw_re.push_back(static_cast<T>(std::cos(ang)));
                p.tw_im.push_back(static_cast<T>(std::sin(ang)));
            }
        }
    } else {
        p.root_re.resize(static_cast<std::size_t>(n));
        p.root_im.resize(static_cast<std::size_t>(n));
        for (int m = 0; m < n; ++m) {
            const double ang = -kTau * m / n;
            p.root_re[static_cast<std::size_t>(m)] = static_cast<T>(std::cos(ang));
            p.root_im[static_cast<std::size_t>(m)] = static_cast<T>(std::sin(ang));
        }
    }
    auto [ins, _] = cache.emplace(n, std::move(p));
    return ins->second;
}

// In-place 1D transform of contiguous data, unnormalized.
template <typename T>
void dft1d(T* re, T* im, int n, int sign, std::vector<T>& scratch) {
    if (n == 1) return;
    const Plan<T>& p = plan_for<T>(n);
    if (p.pow2) {
        for (int i = 0; i < n; ++i) {
            const int j = p.bitrev[static_cast<std::size_t>(i)];
            if (i < j) {
                std::swap(re[i], re[j]);
                std::swap(im[i], im[j]);
            }
        }
        std::size_t tw = 0;
        for (int len = 2; len <= n; len <<= 1) {
            const int half = len / 2;
            for (int start = 0; start < n; start += len) {
                for (int j = 0; j < half; ++j) {
                    const T wr = p.tw_re[tw + static_cast<std::size_t>(j)];
                    const T wi = sign < 0 ? p.tw_im[tw + static_cast<std::size_t>(j)]
                                          : -p.tw_im[tw + static_cast<std::size_t>(j)];
                    const int a = start + j;
                    const int b = a + half;
                    const T tr = re[b] * wr - im[b] * wi;
                    const T ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            tw += static_cast<std::size_t>(half);
        }
    } else {
        // direct summation with exact root indexing: W^(k*j) = roots[(k*j) % n]
        scratch.resize(static_cast<std::size_t>(2 * n));
        T* or_ = scratch.data();
        T* oi_ = scratch.data() + n;
        for (int k = 0; k < n; ++k) {
            T sr = 0, si = 0;
            std::int64_t idx = 0;
            for (int j = 0; j < n; ++j) {
                const auto m = static_cast<std::size_t>(idx);
                const T wr = p.root_re[m];
                const T wi = sign < 0 ? p.root_im[m] : -p.root_im[m];
                sr += re[j] * wr - im[j] * wi;
                si += re[j] * wi + im[j] * wr;
                idx += k;
                if (idx >= n) idx -= n;
            }
            or_[k] = sr;
            oi_[k] = si;
        }
        for (int k = 0; k < n; ++k) {
            re[k] = or_[k];
            im[k] = oi_[k];
        }
    }
}

template <typename T>
void transform_plane_impl(T* re, T* im, int h, int w, int sign) {
    thread_local std::vector<T> scratch;
    thread_local std::vector<T> col_re, col_im;
    for (int r = 0; r < h; ++r) dft1d(re + static_cast<std::int64_t>(r) * w,
                                      im + static_cast<std::int64_t>(r) * w, w, sign, scratch);
    if (h == 1) return;
    col_re.resize(static_cast<std::size_t>(h));
    col_im.resize(static_cast<std::size_t>(h));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) {
            col_re[static_cast<std::size_t>(r)] = re[static_cast<std::int64_t>(r) * w + c];
            col_im[static_cast<std::size_t>(r)] = im[static_cast<std::int64_t>(r) * w + c];
        }
        dft1d(col_re.data(), col_im.data(), h, sign, scratch);
        for (int r = 0; r < h; ++r) {
            re[static_cast<std::int64_t>(r) * w + c] = col_re[static_cast<std::size_t>(r)];
            im[static_cast<std::int64_t>(r) * w + c] = col_im[static_cast<std::size_t>(r)];
        }
    }
}

bool g_flip_inverse_sign = false;

int inverse_sign() { return g_flip_inverse_sign ? -1 : +1; }

}  // namespace

bool& test_hook_flip_inverse_sign() { return g_flip_inverse_sign; }

template <typename T>
void transform_plane(T* re, T* im, int h, int w, int sign) {
    transform_plane_impl(re, im, h, w, sign);
}

template <typename T>
ComplexGridT<T> fft2(const TensorT<T>& x) {
    if (x.rank() < 2) throw ParamError("fft2: tensor rank must be >= 2");
    const int w = x.shape.back();
    const int h = x.shape[x.shape.size() - 2];
    if (h < 1 || w < 1) throw ParamError("fft2: spatial dims must be >= 1");
    ComplexGridT<T> out(x.shape);
    out.re = x.data;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t planes = x.numel() / plane;
    for (std::int64_t p = 0; p < planes; ++p)
        transform_plane_impl(out.re.data() + p * plane, out.im.data() + p * plane, h, w, -1);
    return out;
}

template <typename T>
ComplexGridT<T> fft2_grid(const ComplexGridT<T>& x) {
    ComplexGridT<T> out = x;
    const int w = x.width();
    const int h = x.height();
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t planes = x.numel() / plane;
    for (std::int64_t p = 0; p < planes; ++p)
        transform_plane_impl(out.re.data() + p * plane, out.im.data() + p * plane, h, w, -1);
    return out;
}

template <typename T>
ComplexGridT<T> ifft2_complex(const ComplexGridT<T>& X) {
    ComplexGridT<T> out = X;
    const int w = X.width();
    const int h = X.height();
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t planes = X.numel() / plane;
    const T norm = T(1) / static_cast<T>(plane);
    for (std::int64_t p = 0; p < planes; ++p)
        transform_plane_impl(out.re.data() + p * plane, out.im.data() + p * plane, h, w,
                             inverse_sign());
    const auto& k = simd::active<T>();
    k.scale(out.re.data(), norm, out.re.data(), out.re.size());
    k.scale(out.im.data(), norm, out.im.data(), out.im.size());
    return out;
}

template <typename T>
TensorT<T> ifft2_real(const ComplexGridT<T>& X, T* max_imag) {
    ComplexGridT<T> full = ifft2_complex(X);
    if (max_imag) {
        T m = 0;
        for (const T& v : full.im) m = std::max(m, std::abs(v));
        *max_imag = m;
    }
    TensorT<T> out;
    out.shape = X.shape;
    out.data = std::move(full.re);
    return out;
}

template <typename T>
ComplexGridT<T> cmul(const ComplexGridT<T>& a, const ComplexGridT<T>& b) {
    if (!a.same_shape(b)) throw ParamError("cmul: shape mismatch");
    ComplexGridT<T> out(a.shape);
    simd::active<T>().cmul(out.re.data(), out.im.data(), a.re.data(), a.im.data(),
                           b.re.data(), b.im.data(), out.re.size());
    return out;
}

template ComplexGridT<float> fft2<float>(const TensorT<float>&);
template ComplexGridT<double> fft2<double>(const TensorT<double>&);
template ComplexGridT<float> fft2_grid<float>(const ComplexGridT<float>&);
template ComplexGridT<double> fft2_grid<double>(const ComplexGridT<double>&);
template TensorT<float> ifft2_real<float>(const ComplexGridT<float>&, float*);
template TensorT<double> ifft2_real<double>(const ComplexGridT<double>&, double*);
template ComplexGridT<float> ifft2_complex<float>(const ComplexGridT<float>&);
template ComplexGridT<double> ifft2_complex<double>(const ComplexGridT<double>&);
template ComplexGridT<float> cmul<float>(const ComplexGridT<float>&, const ComplexGridT<float>&);
template ComplexGridT<double> cmul<double>(const ComplexGridT<double>&,
                                           const ComplexGridT<double>&);
template void transform_plane<float>(float*, float*, int, int, int);
template void transform_plane<double>(double*, double*, int, int, int);

}  // namespace fdb::fft
