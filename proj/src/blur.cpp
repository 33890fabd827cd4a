#include "fdb/blur.hpp"

#include <cmath>
#include <fstream>

#include "fdb/rng.hpp"
#include "fdb/simd.hpp"
#include "fdb/tensor_io.hpp"
#include "pad_util.hpp"

namespace fdb::blur {

template <typename T>
void check_normalized(const PixelKernelFieldT<T>& field) {
    const int H = field.H, W = field.W, k = field.k;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            T s = 0;
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) {
                    const T w = field.at(i, j, u, v);
                    if (w < T(-1e-6)) throw ValidationError("kernel field has negative weights");
                    s += w;
                }
            if (std::abs(static_cast<double>(s) - 1.0) > 1e-5)
                throw ValidationError("kernel field is not normalized");
        }
}

template <typename T>
TensorT<T> reblur(const TensorT<T>& x, const PixelKernelFieldT<T>& field) {
    if (x.rank() != 3) throw ParamError("reblur: image must be [C,H,W]");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H != field.H || W != field.W) throw ParamError("reblur: field dims must match image");
    check_normalized(field);
    const int k = field.k, r = (k - 1) / 2;

    TensorT<T> x4;
    x4.shape = Shape{1, C, H, W};
    x4.data = x.data;
    TensorT<T> xp = detail::pad_replicate(x4, r);

    TensorT<T> out = TensorT<T>::zeros(x.shape);
    const auto& kt = simd::active<T>();
    // row-contiguous only in j for fixed (u,v) when walking the field by
    // pixel, so accumulate per output pixel via dot over the kernel row
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                T acc = 0;
                for (int u = 0; u < k; ++u)
                    acc += kt.dot(&field.weights[((static_cast<std::int64_t>(i) * W + j) * k + u) * k],
                                  &xp.at4(0, c, i + u, j), static_cast<std::size_t>(k));
                out.at3(c, i, j) = acc;
            }
    return out;
}

template <typename T>
PixelKernelFieldT<T> normalize_kernels(const TensorT<T>& raw) {
    if (raw.rank() != 4 || raw.dim(2) != raw.dim(3) || raw.dim(2) % 2 == 0)
        throw ParamError("normalize_kernels: expected [H,W,k,k] with odd k");
    PixelKernelFieldT<T> f;
    f.H = raw.dim(0);
    f.W = raw.dim(1);
    f.k = raw.dim(2);
    f.weights = TensorT<T>(raw.shape);
    const int kk = f.k * f.k;
    for (int i = 0; i < f.H; ++i)
        for (int j = 0; j < f.W; ++j) {
            const std::int64_t base = (static_cast<std::int64_t>(i) * f.W + j) * kk;
            T mx = raw[base];
            for (int q = 1; q < kk; ++q) mx = std::max(mx, raw[base + q]);
            T z = 0;
            for (int q = 0; q < kk; ++q) {
                const T e = std::exp(raw[base + q] - mx);
                f.weights[base + q] = e;
                z += e;
            }
            const T inv = T(1) / z;
            for (int q = 0; q < kk; ++q) f.weights[base + q] *= inv;
        }
    return f;
}

namespace {

// Four-sinusoid random field; frequency shrinks as smoothness grows, so the
// realized total variation does too.
template <typename T>
struct SmoothField {
    double a[4], fx[4], fy[4], ph[4];

    void init(Rng& rng, double smoothness) {
        for (int m = 0; m < 4; ++m) {
            a[m] = rng.uniform(0.4, 1.0);
            fx[m] = rng.uniform(0.5, 2.0) / smoothness;
            fy[m] = rng.uniform(0.5, 2.0) / smoothness;
            ph[m] = rng.uniform(0.0, 6.283185307179586);
        }
    }
    // in [-1, 1]
    double eval(double i01, double j01) const {
        double s = 0, norm = 0;
        for (int m = 0; m < 4; ++m) {
            s += a[m] * std::sin(6.283185307179586 * (fx[m] * j01 + fy[m] * i01) + ph[m]);
            norm += a[m];
        }
        return s / norm;
    }
};

}  // namespace

template <typename T>
PixelKernelFieldT<T> synth_kernel_field(int H, int W, int k, std::uint64_t seed, T max_len,
                                        T smoothness) {
    if (k < 1 || k % 2 == 0) throw ParamError("synth_kernel_field: k must be odd");
    const int r = (k - 1) / 2;
    if (static_cast<double>(max_len) > r)
        throw ParamError("synth_kernel_field: max_len must be <= (k-1)/2");
    if (!(smoothness > T(0))) throw ParamError("synth_kernel_field: smoothness must be positive");

    Rng rng = named_rng(seed, "kernel-field");
    SmoothField<T> angle_field, len_field;
    angle_field.init(rng, static_cast<double>(smoothness));
    len_field.init(rng, static_cast<double>(smoothness));

    PixelKernelFieldT<T> f;
    f.H = H;
    f.W = W;
    f.k = k;
    f.weights = TensorT<T>::zeros(Shape{H, W, k, k});

    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const double i01 = H > 1 ? static_cast<double>(i) / (H - 1) : 0.0;
            const double j01 = W > 1 ? static_cast<double>(j) / (W - 1) : 0.0;
            const double theta = 3.141592653589793 * angle_field.eval(i01, j01);
            const double len =
                static_cast<double>(max_len) * 0.5 * (1.0 + len_field.eval(i01, j01));

            T* kern = &f.at(i, j, 0, 0);
            const double cx = r, cy = r;
            const int samples = std::max(3, 2 * static_cast<int>(std::ceil(len)) * 4 + 1);
            double total = 0;
            for (int s = 0; s < samples; ++s) {
                const double t = samples == 1 ? 0.0 : -len + 2.0 * len * s / (samples - 1);
                const double py = cy + t * std::sin(theta);
                const double px = cx + t * std::cos(theta);
                const int y0 = static_cast<int>(std::floor(py));
                const int x0 = static_cast<int>(std::floor(px));
                const double wy = py - y0, wx = px - x0;
                const double w00 = (1 - wy) * (1 - wx), w01 = (1 - wy) * wx;
                const double w10 = wy * (1 - wx), w11 = wy * wx;
                auto splat = [&](int yy, int xx, double w) {
                    if (yy < 0 || yy >= k || xx < 0 || xx >= k || w <= 0) return;
                    kern[yy * k + xx] += static_cast<T>(w);
                    total += w;
                };
                splat(y0, x0, w00);
                splat(y0, x0 + 1, w01);
                splat(y0 + 1, x0, w10);
                splat(y0 + 1, x0 + 1, w11);
            }
            const T inv = static_cast<T>(1.0 / total);
            for (int q = 0; q < k * k; ++q) kern[q] *= inv;
        }
    return f;
}

template <typename T>
PixelKernelFieldT<T> delta_field(int H, int W, int k) {
    if (k < 1 || k % 2 == 0) throw ParamError("delta_field: k must be odd");
    PixelKernelFieldT<T> f;
    f.H = H;
    f.W = W;
    f.k = k;
    f.weights = TensorT<T>::zeros(Shape{H, W, k, k});
    const int r = (k - 1) / 2;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) f.at(i, j, r, r) = T(1);
    return f;
}

template <typename T>
PixelKernelFieldT<T> flip_horizontal_field(const PixelKernelFieldT<T>& field) {
    PixelKernelFieldT<T> out;
    out.H = field.H;
    out.W = field.W;
    out.k = field.k;
    out.weights = TensorT<T>(field.weights.shape);
    for (int i = 0; i < field.H; ++i)
        for (int j = 0; j < field.W; ++j)
            for (int u = 0; u < field.k; ++u)
                for (int v = 0; v < field.k; ++v)
                    out.at(i, j, u, v) = field.at(i, field.W - 1 - j, u, field.k - 1 - v);
    return out;
}

template <typename T>
TensorT<T> flip_horizontal_image(const TensorT<T>& x) {
    if (x.rank() != 3) throw ParamError("flip_horizontal_image: expected [C,H,W]");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    TensorT<T> out(x.shape);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) out.at3(c, i, j) = x.at3(c, i, W - 1 - j);
    return out;
}

template <typename T>
TensorT<T> field_to_channels(const PixelKernelFieldT<T>& field) {
    const int H = field.H, W = field.W, k = field.k;
    TensorT<T> out(Shape{1, k * k, H, W});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) out.at4(0, u * k + v, i, j) = field.at(i, j, u, v);
    return out;
}

template <typename T>
PixelKernelFieldT<T> channels_to_field(const TensorT<T>& ch) {
    if (ch.rank() != 4 || ch.dim(0) != 1)
        throw ParamError("channels_to_field: expected [1,k*k,H,W]");
    const int kk = ch.dim(1);
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
    if (k * k != kk || k % 2 == 0) throw ParamError("channels_to_field: channels must be odd k^2");
    PixelKernelFieldT<T> f;
    f.H = ch.dim(2);
    f.W = ch.dim(3);
    f.k = k;
    f.weights = TensorT<T>(Shape{f.H, f.W, k, k});
    for (int i = 0; i < f.H; ++i)
        for (int j = 0; j < f.W; ++j)
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) f.at(i, j, u, v) = ch.at4(0, u * k + v, i, j);
    return f;
}

template <typename T>
void save_field(const std::string& path, const PixelKernelFieldT<T>& field, std::uint64_t seed) {
    save_tensor_file(path, field.weights);
    std::ofstream side(path + ".meta");
    if (!side) throw ParamError("save_field: cannot write sidecar for " + path);
    side << "H=" << field.H << "\nW=" << field.W << "\nk=" << field.k << "\nseed=" << seed
         << "\n";
}

template <typename T>
PixelKernelFieldT<T> load_field(const std::string& path) {
    TensorT<T> w = load_tensor_file<T>(path);
    if (w.rank() != 4 || w.dim(2) != w.dim(3) || w.dim(2) % 2 == 0)
        throw ParseError("kernel-field file must hold [H,W,k,k] with odd k", 0);
    PixelKernelFieldT<T> f;
    f.H = w.dim(0);
    f.W = w.dim(1);
    f.k = w.dim(2);
    f.weights = std::move(w);
    return f;
}

#define FDB_BLUR_INSTANTIATE(T)                                                              \
    template void check_normalized<T>(const PixelKernelFieldT<T>&);                          \
    template TensorT<T> reblur<T>(const TensorT<T>&, const PixelKernelFieldT<T>&);           \
    template PixelKernelFieldT<T> normalize_kernels<T>(const TensorT<T>&);                   \
    template PixelKernelFieldT<T> synth_kernel_field<T>(int, int, int, std::uint64_t, T, T); \
    template PixelKernelFieldT<T> delta_field<T>(int, int, int);                             \
    template PixelKernelFieldT<T> flip_horizontal_field<T>(const PixelKernelFieldT<T>&);     \
    template TensorT<T> flip_horizontal_image<T>(const TensorT<T>&);                         \
    template TensorT<T> field_to_channels<T>(const PixelKernelFieldT<T>&);                   \
    template PixelKernelFieldT<T> channels_to_field<T>(const TensorT<T>&);                   \
    template void save_field<T>(const std::string&, const PixelKernelFieldT<T>&,             \
                                std::uint64_t);                                              \
    template PixelKernelFieldT<T> load_field<T>(const std::string&);

FDB_BLUR_INSTANTIATE(float)
FDB_BLUR_INSTANTIATE(double)
#undef FDB_BLUR_INSTANTIATE

}  // namespace fdb::blur
