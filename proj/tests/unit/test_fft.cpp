#include <doctest.h>

#include <cmath>
#include <vector>

#include "fdb/fft.hpp"
#include "fdb/oracles.hpp"
#include "fdb/rng.hpp"

using namespace fdb;

TEST_CASE("fft2 of delta is all-ones spectrum") {
    Tensor64 x(Shape{1, 1, 8, 8});
    x.at4(0, 0, 0, 0) = 1.0;
    auto X = fft::fft2(x);
    for (std::size_t i = 0; i < X.re.size(); ++i) {
        CHECK(X.re[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(X.im[i]) < 1e-12);
    }
}

TEST_CASE("fft2 of constant concentrates at DC") {
    Tensor64 x = Tensor64::full(Shape{1, 1, 4, 6}, 0.5);
    auto X = fft::fft2(x);
    CHECK(X.re[0] == doctest::Approx(0.5 * 24).epsilon(1e-12));
    for (std::size_t i = 1; i < X.re.size(); ++i) {
        CHECK(std::abs(X.re[i]) < 1e-10);
        CHECK(std::abs(X.im[i]) < 1e-10);
    }
}

TEST_CASE("fft2 matches naive DFT oracle") {
    for (auto [h, w] : {std::pair{4, 4}, {8, 8}, {16, 16}, {3, 5}, {7, 12}, {1, 9}, {6, 1}}) {
        Rng rng = named_rng(11, "fft-oracle");
        Tensor64 x(Shape{1, 1, h, w});
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
        auto X = fft::fft2(x);
        std::vector<double> oracle_re(x.data.size()), oracle_im(x.data.size());
        oracle::naive_dft2_plane(x.data.data(), h, w, oracle_re.data(), oracle_im.data());
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            CHECK(X.re[i] == doctest::Approx(oracle_re[i]).epsilon(1e-9));
            CHECK(std::abs(X.im[i] - oracle_im[i]) < 1e-9);
        }
    }
}

TEST_CASE("ifft2 round-trips fft2") {
    for (auto [h, w] : {std::pair{8, 8}, {5, 7}, {16, 12}, {1, 1}}) {
        Rng rng = named_rng(12, "fft-roundtrip");
        Tensor64 x(Shape{2, 3, h, w});
        for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
        double resid = 0;
        Tensor64 back = fft::ifft2_real(fft::fft2(x), &resid);
        CHECK(resid < 1e-11);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            CHECK(back.data[i] == doctest::Approx(x.data[i]).epsilon(1e-11));
    }
}

TEST_CASE("real input spectrum is conjugate-symmetric") {
    Rng rng = named_rng(13, "fft-sym");
    const int h = 8, w = 6;
    Tensor64 x(Shape{1, 1, h, w});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    auto X = fft::fft2(x);
    for (int p = 0; p < h; ++p)
        for (int q = 0; q < w; ++q) {
            const int pc = (h - p) % h, qc = (w - q) % w;
            CHECK(X.re[p * w + q] == doctest::Approx(X.re[pc * w + qc]).epsilon(1e-10));
            CHECK(X.im[p * w + q] == doctest::Approx(-X.im[pc * w + qc]).epsilon(1e-10));
        }
}

TEST_CASE("Parseval energy identity") {
    Rng rng = named_rng(14, "fft-parseval");
    const int h = 16, w = 16;
    Tensor64 x(Shape{1, 1, h, w});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    auto X = fft::fft2(x);
    double spatial = 0, spectral = 0;
    for (double v : x.data) spatial += v * v;
    for (std::size_t i = 0; i < X.re.size(); ++i)
        spectral += X.re[i] * X.re[i] + X.im[i] * X.im[i];
    CHECK(spectral / (h * w) == doctest::Approx(spatial).epsilon(1e-11));
}

TEST_CASE("convolution theorem on mixed sizes") {
    for (auto [h, w] : {std::pair{8, 8}, {6, 10}, {5, 5}, {16, 16}}) {
        Rng rng = named_rng(15, "fft-convthm");
        Tensor64 a(Shape{1, 1, h, w}), b(Shape{1, 1, h, w});
        for (auto& v : a.data) v = rng.uniform(-1.0, 1.0);
        for (auto& v : b.data) v = rng.uniform(-1.0, 1.0);
        auto prod = fft::cmul(fft::fft2(a), fft::fft2(b));
        Tensor64 viaFreq = fft::ifft2_real(prod);
        std::vector<double> direct(a.data.size());
        oracle::circular_conv2d_plane(a.data.data(), b.data.data(), h, w, direct.data());
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(std::abs(viaFreq.data[i] - direct[i]) < 1e-10);
    }
}

TEST_CASE("inverse sign fault injection breaks the round trip") {
    Rng rng = named_rng(16, "fft-fault");
    Tensor64 x(Shape{1, 1, 8, 8});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    fft::test_hook_flip_inverse_sign() = true;
    Tensor64 back = fft::ifft2_real(fft::fft2(x));
    fft::test_hook_flip_inverse_sign() = false;
    double maxerr = 0;
    for (std::size_t i = 0; i < x.data.size(); ++i)
        maxerr = std::max(maxerr, std::abs(back.data[i] - x.data[i]));
    CHECK(maxerr > 1e-3);
}
