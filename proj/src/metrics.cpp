#include "fdb/metrics.hpp"

#include <cmath>
#include <vector>

namespace fdb {
namespace {

// valid-region separable Gaussian filter: rows then columns
void gauss_valid(const std::vector<double>& src, int h, int w, const double* g1, int win,
                 std::vector<double>& tmp, std::vector<double>& dst) {
    const int wo = w - win + 1, ho = h - win + 1;
    tmp.assign(static_cast<std::size_t>(h) * wo, 0.0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < wo; ++j) {
            double s = 0;
            for (int t = 0; t < win; ++t) s += g1[t] * src[static_cast<std::size_t>(i) * w + j + t];
            tmp[static_cast<std::size_t>(i) * wo + j] = s;
        }
    dst.assign(static_cast<std::size_t>(ho) * wo, 0.0);
    for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
            double s = 0;
            for (int t = 0; t < win; ++t) s += g1[t] * tmp[static_cast<std::size_t>(i + t) * wo + j];
            dst[static_cast<std::size_t>(i) * wo + j] = s;
        }
}

}  // namespace

template <typename T>
double psnr(const TensorT<T>& a, const TensorT<T>& b, double peak) {
    if (!a.same_shape(b)) throw ParamError("psnr: shape mismatch");
    double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse <= 0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

template <typename T>
double ssim(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw ParamError("ssim: shape mismatch");
    if (a.rank() != 3) throw ParamError("ssim: expected [C,H,W]");
    const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
    constexpr int win = 11;
    if (H < win || W < win) throw ParamError("ssim: image smaller than the 11x11 window");

    double g1[win];
    double gs = 0;
    for (int t = 0; t < win; ++t) {
        const double d = t - 5;
        g1[t] = std::exp(-d * d / (2 * 1.5 * 1.5));
        gs += g1[t];
    }
    for (int t = 0; t < win; ++t) g1[t] /= gs;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    std::vector<double> xa(hw), xb(hw), aa(hw), bb(hw), ab(hw);
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;

    double total = 0;
    std::int64_t count = 0;
    for (int c = 0; c < C; ++c) {
        for (std::size_t p = 0; p < hw; ++p) {
            xa[p] = static_cast<double>(a.data[static_cast<std::size_t>(c) * hw + p]);
            xb[p] = static_cast<double>(b.data[static_cast<std::size_t>(c) * hw + p]);
            aa[p] = xa[p] * xa[p];
            bb[p] = xb[p] * xb[p];
            ab[p] = xa[p] * xb[p];
        }
        gauss_valid(xa, H, W, g1, win, tmp, mu_a);
        gauss_valid(xb, H, W, g1, win, tmp, mu_b);
        gauss_valid(aa, H, W, g1, win, tmp, m_aa);
        gauss_valid(bb, H, W, g1, win, tmp, m_bb);
        gauss_valid(ab, H, W, g1, win, tmp, m_ab);
        for (std::size_t p = 0; p < mu_a.size(); ++p) {
            const double va = m_aa[p] - mu_a[p] * mu_a[p];
            const double vb = m_bb[p] - mu_b[p] * mu_b[p];
            const double cov = m_ab[p] - mu_a[p] * mu_b[p];
            const double num = (2 * mu_a[p] * mu_b[p] + c1) * (2 * cov + c2);
            const double den = (mu_a[p] * mu_a[p] + mu_b[p] * mu_b[p] + c1) * (va + vb + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

template double psnr<float>(const TensorT<float>&, const TensorT<float>&, double);
template double psnr<double>(const TensorT<double>&, const TensorT<double>&, double);
template double ssim<float>(const TensorT<float>&, const TensorT<float>&);
template double ssim<double>(const TensorT<double>&, const TensorT<double>&);

}  // namespace fdb
