#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fdb/blur.hpp"
#include "fdb/rng.hpp"

using namespace fdb;

namespace {

Tensor64 random_image(int C, int H, int W, Rng& rng) {
    Tensor64 t(Shape{C, H, W});
    for (auto& v : t.data) v = rng.uniform(0.0, 1.0);
    return t;
}

// total variation of the field between horizontally adjacent pixels,
// measured on the kernel weights themselves
double field_tv(int H, int W, int k, double smoothness) {
    auto f = blur::synth_kernel_field<double>(H, W, k, 5, 3.0, smoothness);
    double tv = 0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j + 1 < W; ++j)
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v)
                    tv += std::abs(f.at(i, j + 1, u, v) - f.at(i, j, u, v));
    return tv;
}

}  // namespace

TEST_CASE("reblur with delta field is identity") {
    Rng rng = named_rng(41, "blur-delta");
    Tensor64 x = random_image(3, 9, 8, rng);
    auto d = blur::delta_field<double>(9, 8, 5);
    Tensor64 y = blur::reblur(x, d);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("reblur keeps constants constant") {
    Rng rng = named_rng(42, "blur-const");
    Tensor64 raw(Shape{7, 6, 3, 3});
    for (auto& v : raw.data) v = rng.uniform(-2.0, 2.0);
    auto f = blur::normalize_kernels(raw);
    Tensor64 x = Tensor64::full(Shape{1, 7, 6}, 0.375);
    Tensor64 y = blur::reblur(x, f);
    for (double v : y.data) CHECK(v == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("reblur is linear in the image") {
    Rng rng = named_rng(43, "blur-linear");
    Tensor64 x = random_image(1, 8, 8, rng);
    Tensor64 z = random_image(1, 8, 8, rng);
    auto f = blur::synth_kernel_field<double>(8, 8, 5, 3, 2.0, 2.0);
    const double alpha = 0.7, beta = -0.4;
    Tensor64 mix(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        mix.data[i] = alpha * x.data[i] + beta * z.data[i];
    Tensor64 lhs = blur::reblur(mix, f);
    Tensor64 rx = blur::reblur(x, f);
    Tensor64 rz = blur::reblur(z, f);
    for (std::size_t i = 0; i < lhs.data.size(); ++i)
        CHECK(lhs.data[i] == doctest::Approx(alpha * rx.data[i] + beta * rz.data[i]).epsilon(1e-9));
}

TEST_CASE("reblur preserves interior mean of any image") {
    Rng rng = named_rng(44, "blur-mean");
    const int H = 16, W = 16, k = 5, r = 2;
    Tensor64 x = random_image(1, H, W, rng);
    // uniform kernels: each interior output is the window mean of x, so the
    // interior sum of y equals the window-mean sum of x exactly
    Tensor64 raw = Tensor64::zeros(Shape{H, W, k, k});
    auto f = blur::normalize_kernels(raw);
    Tensor64 y = blur::reblur(x, f);
    double mx = 0, my = 0;
    for (int i = r; i < H - r; ++i)
        for (int j = r; j < W - r; ++j) {
            double s = 0;
            for (int u = -r; u <= r; ++u)
                for (int v = -r; v <= r; ++v) s += x.at3(0, i + u, j + v);
            mx += s / (k * k);
            my += y.at3(0, i, j);
        }
    CHECK(my == doctest::Approx(mx).epsilon(1e-6));
}

TEST_CASE("reblur rejects unnormalized fields and dim mismatches") {
    Rng rng = named_rng(45, "blur-errors");
    Tensor64 x = random_image(1, 6, 6, rng);
    auto f = blur::delta_field<double>(6, 6, 3);
    f.weights[0] = 2.0;
    CHECK_THROWS_AS(blur::reblur(x, f), ValidationError);
    auto g = blur::delta_field<double>(5, 6, 3);
    CHECK_THROWS_AS(blur::reblur(x, g), ParamError);
}

TEST_CASE("normalize_kernels: zeros give uniform, spike saturates") {
    Tensor64 raw = Tensor64::zeros(Shape{2, 2, 3, 3});
    auto f = blur::normalize_kernels(raw);
    for (double v : f.weights.data) CHECK(v == doctest::Approx(1.0 / 9).epsilon(1e-12));

    raw.at4(0, 0, 1, 2) = 20.0;
    auto g = blur::normalize_kernels(raw);
    CHECK(g.at(0, 0, 1, 2) > 0.999);
    double s = 0;
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) s += g.at(1, 1, u, v);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("synth_kernel_field: max_len 0 gives delta, seeds reproduce") {
    auto f = blur::synth_kernel_field<double>(6, 5, 5, 9, 0.0, 2.0);
    auto d = blur::delta_field<double>(6, 5, 5);
    for (std::size_t i = 0; i < f.weights.data.size(); ++i)
        CHECK(f.weights.data[i] == doctest::Approx(d.weights.data[i]).epsilon(1e-12));

    auto a = blur::synth_kernel_field<double>(8, 8, 7, 123, 3.0, 2.0);
    auto b = blur::synth_kernel_field<double>(8, 8, 7, 123, 3.0, 2.0);
    CHECK(a.weights.data == b.weights.data);
    auto c = blur::synth_kernel_field<double>(8, 8, 7, 124, 3.0, 2.0);
    bool differs = false;
    for (std::size_t i = 0; i < a.weights.data.size(); ++i)
        if (a.weights.data[i] != c.weights.data[i]) differs = true;
    CHECK(differs);

    blur::check_normalized(a);
    CHECK_THROWS_AS(blur::synth_kernel_field<double>(4, 4, 5, 1, 3.0, 2.0), ParamError);
}

TEST_CASE("synth_kernel_field smoothness lowers spatial variation") {
    const double tv_rough = field_tv(12, 12, 9, 1.0);
    const double tv_smooth = field_tv(12, 12, 9, 4.0);
    CHECK(tv_smooth < tv_rough);
}

TEST_CASE("horizontal flip equivariance of reblur") {
    Rng rng = named_rng(46, "blur-flip");
    Tensor64 x = random_image(3, 10, 12, rng);
    auto f = blur::synth_kernel_field<double>(10, 12, 5, 77, 2.0, 2.0);
    Tensor64 lhs = blur::reblur(blur::flip_horizontal_image(x), blur::flip_horizontal_field(f));
    Tensor64 rhs = blur::flip_horizontal_image(blur::reblur(x, f));
    for (std::size_t i = 0; i < lhs.data.size(); ++i)
        CHECK(lhs.data[i] == doctest::Approx(rhs.data[i]).epsilon(1e-9));
}

TEST_CASE("field channel conversion round-trips") {
    auto f = blur::synth_kernel_field<double>(6, 7, 3, 11, 1.0, 2.0);
    Tensor64 ch = blur::field_to_channels(f);
    REQUIRE(ch.shape == Shape{1, 9, 6, 7});
    auto back = blur::channels_to_field(ch);
    CHECK(back.weights.data == f.weights.data);
}

TEST_CASE("kernel-field file round-trips with sidecar") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fdb_blur_test";
    fs::create_directories(dir);
    auto f = blur::synth_kernel_field<double>(5, 5, 3, 21, 1.0, 2.0);
    const std::string path = (dir / "field.fdt").string();
    blur::save_field(path, f, 21);
    auto back = blur::load_field<double>(path);
    CHECK(back.H == 5);
    CHECK(back.k == 3);
    CHECK(back.weights.data == f.weights.data);
    CHECK(fs::exists(path + ".meta"));
    fs::remove_all(dir);
}
