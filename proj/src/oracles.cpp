#include "fdb/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace fdb::oracle {

void naive_dft2_plane(const double* x, int h, int w, double* out_re, double* out_im) {
    const double tau = 6.283185307179586476925286766559;
    for (int p = 0; p < h; ++p) {
        for (int q = 0; q < w; ++q) {
            double sr = 0, si = 0;
            for (int m = 0; m < h; ++m) {
                for (int n = 0; n < w; ++n) {
                    const double ang =
                        -tau * (static_cast<double>(p) * m / h + static_cast<double>(q) * n / w);
                    const double v = x[m * w + n];
                    sr += v * std::cos(ang);
                    si += v * std::sin(ang);
                }
            }
            out_re[p * w + q] = sr;
            out_im[p * w + q] = si;
        }
    }
}

void circular_conv2d_plane(const double* a, const double* b, int h, int w, double* out) {
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double s = 0;
            for (int m = 0; m < h; ++m) {
                for (int n = 0; n < w; ++n) {
                    const int bi = ((i - m) % h + h) % h;
                    const int bj = ((j - n) % w + w) % w;
                    s += a[m * w + n] * b[bi * w + bj];
                }
            }
            out[i * w + j] = s;
        }
    }
}

template <typename T>
TensorT<T> conv2d_naive(const TensorT<T>& input, const TensorT<T>& weight,
                        const TensorT<T>& bias, int stride, int pad) {
    const int B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    TensorT<T> out(Shape{B, Cout, Ho, Wo});
    for (int b = 0; b < B; ++b)
        for (int co = 0; co < Cout; ++co)
            for (int oi = 0; oi < Ho; ++oi)
                for (int oj = 0; oj < Wo; ++oj) {
                    double s = static_cast<double>(bias[co]);
                    for (int ci = 0; ci < Cin; ++ci)
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                const int ii = oi * stride + u - pad;
                                const int jj = oj * stride + v - pad;
                                if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
                                s += static_cast<double>(input.at4(b, ci, ii, jj)) *
                                     static_cast<double>(
                                         weight[((static_cast<std::int64_t>(co) * Cin + ci) * kh + u) * kw + v]);
                            }
                    out.at4(b, co, oi, oj) = static_cast<T>(s);
                }
    return out;
}

template <typename T>
TensorT<T> dwconv2d_naive(const TensorT<T>& input, const TensorT<T>& weight,
                          const TensorT<T>& bias, int pad) {
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int kh = weight.dim(2), kw = weight.dim(3);
    TensorT<T> out(input.shape);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    double s = static_cast<double>(bias[c]);
                    for (int u = 0; u < kh; ++u)
                        for (int v = 0; v < kw; ++v) {
                            const int ii = i + u - pad;
                            const int jj = j + v - pad;
                            if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
                            s += static_cast<double>(input.at4(b, c, ii, jj)) *
                                 static_cast<double>(
                                     weight[(static_cast<std::int64_t>(c) * kh + u) * kw + v]);
                        }
                    out.at4(b, c, i, j) = static_cast<T>(s);
                }
    return out;
}

template <typename T>
TensorT<T> reblur_naive(const TensorT<T>& x, const TensorT<T>& field) {
    const bool batched = x.rank() == 4;
    const int B = batched ? x.dim(0) : 1;
    const int C = batched ? x.dim(1) : x.dim(0);
    const int H = batched ? x.dim(2) : x.dim(1);
    const int W = batched ? x.dim(3) : x.dim(2);
    const int k = field.dim(2);
    const int r = (k - 1) / 2;
    TensorT<T> out(x.shape);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    double s = 0;
                    for (int u = 0; u < k; ++u)
                        for (int v = 0; v < k; ++v) {
                            const int ii = std::clamp(i + u - r, 0, H - 1);
                            const int jj = std::clamp(j + v - r, 0, W - 1);
                            const double pix = batched
                                ? static_cast<double>(x.at4(b, c, ii, jj))
                                : static_cast<double>(x.at3(c, ii, jj));
                            s += static_cast<double>(
                                     field[((static_cast<std::int64_t>(i) * W + j) * k + u) * k + v]) *
                                 pix;
                        }
                    if (batched)
                        out.at4(b, c, i, j) = static_cast<T>(s);
                    else
                        out.at3(c, i, j) = static_cast<T>(s);
                }
    return out;
}

double ssim_direct(const TensorT<double>& a, const TensorT<double>& b) {
    const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
    const int win = 11, r = 5;
    const double sigma = 1.5;
    double g[win][win];
    double gsum = 0;
    for (int u = 0; u < win; ++u)
        for (int v = 0; v < win; ++v) {
            const double du = u - r, dv = v - r;
            g[u][v] = std::exp(-(du * du + dv * dv) / (2 * sigma * sigma));
            gsum += g[u][v];
        }
    for (int u = 0; u < win; ++u)
        for (int v = 0; v < win; ++v) g[u][v] /= gsum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    std::int64_t count = 0;
    for (int c = 0; c < C; ++c)
        for (int i = 0; i + win <= H; ++i)
            for (int j = 0; j + win <= W; ++j) {
                double mu_a = 0, mu_b = 0;
                for (int u = 0; u < win; ++u)
                    for (int v = 0; v < win; ++v) {
                        mu_a += g[u][v] * a.at3(c, i + u, j + v);
                        mu_b += g[u][v] * b.at3(c, i + u, j + v);
                    }
                double var_a = 0, var_b = 0, cov = 0;
                for (int u = 0; u < win; ++u)
                    for (int v = 0; v < win; ++v) {
                        const double da = a.at3(c, i + u, j + v) - mu_a;
                        const double db = b.at3(c, i + u, j + v) - mu_b;
                        var_a += g[u][v] * da * da;
                        var_b += g[u][v] * db * db;
                        cov += g[u][v] * da * db;
                    }
                const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
                const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total += num / den;
                ++count;
            }
    return total / static_cast<double>(count);
}

template TensorT<float> conv2d_naive<float>(const TensorT<float>&, const TensorT<float>&,
                                            const TensorT<float>&, int, int);
template TensorT<double> conv2d_naive<double>(const TensorT<double>&, const TensorT<double>&,
                                              const TensorT<double>&, int, int);
template TensorT<float> dwconv2d_naive<float>(const TensorT<float>&, const TensorT<float>&,
                                              const TensorT<float>&, int);
template TensorT<double> dwconv2d_naive<double>(const TensorT<double>&, const TensorT<double>&,
                                                const TensorT<double>&, int);
template TensorT<float> reblur_naive<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> reblur_naive<double>(const TensorT<double>&, const TensorT<double>&);

}  // namespace fdb::oracle
