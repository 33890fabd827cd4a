#include <doctest.h>

#include "fdb/grad_check.hpp"
#include "fdb/rng.hpp"

using namespace fdb;

namespace {

Tensor64 rnd(Shape s, const char* tag, double lo = -1, double hi = 1) {
    Rng rng = named_rng(77, tag);
    Tensor64 t(std::move(s));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

constexpr double kEps = 1e-5;
constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("grad: sum is exact") {
    auto f = [](Tape64& t, const std::vector<Var>& v) { return t.sum(v[0]); };
    CHECK(grad_check<double>(f, {rnd({2, 3}, "g-sum")}, kEps) < 1e-10);
}

TEST_CASE("grad: elementwise ops") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var s = t.add(v[0], v[1]);
        Var d = t.sub(s, v[2]);
        Var m = t.mul(d, v[0]);
        return t.sum(t.scale(m, 1.3));
    };
    CHECK(grad_check<double>(f, {rnd({2, 4}, "g-el0"), rnd({2, 4}, "g-el1"), rnd({2, 4}, "g-el2")},
                             kEps) < kTol);
}

TEST_CASE("grad: leaky_relu") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        return t.sum(t.mul(t.leaky_relu(v[0], 0.1), v[0]));
    };
    // keep coordinates away from the kink
    Tensor64 x = rnd({3, 5}, "g-lrelu");
    for (auto& v : x.data)
        if (v > -0.05 && v < 0.05) v += 0.2;
    CHECK(grad_check<double>(f, {x}, kEps) < kTol);
}

TEST_CASE("grad: conv2d w.r.t. input, weight, bias") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.conv2d(v[0], v[1], v[2], 1, 1);
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 2, 4, 4}, "g-conv-x"), rnd({3, 2, 3, 3}, "g-conv-w"),
                  rnd({3}, "g-conv-b")},
              kEps) < kTol);
}

TEST_CASE("grad: conv2d stride 2") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.conv2d(v[0], v[1], v[2], 2, 1);
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 2, 6, 6}, "g-conv2-x"), rnd({2, 2, 3, 3}, "g-conv2-w"),
                  rnd({2}, "g-conv2-b")},
              kEps) < kTol);
}

TEST_CASE("grad: dwconv2d") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.dwconv2d(v[0], v[1], v[2], 1);
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 3, 4, 4}, "g-dw-x"), rnd({3, 1, 3, 3}, "g-dw-w"), rnd({3}, "g-dw-b")},
              kEps) < kTol);
}

TEST_CASE("grad: layer_norm then sum of squares") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.layer_norm(v[0], v[1], v[2], 1e-6);
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 4, 3, 3}, "g-ln-x"), rnd({4}, "g-ln-g", 0.5, 1.5), rnd({4}, "g-ln-b")},
              kEps) < 1e-6);
}

TEST_CASE("grad: softmax_channels") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.softmax_channels(v[0]);
        return t.sum(t.mul(y, v[1]));
    };
    CHECK(grad_check<double>(f, {rnd({1, 5, 2, 2}, "g-sm-x", -2, 2), rnd({1, 5, 2, 2}, "g-sm-t")},
                             kEps) < kTol);
}

TEST_CASE("grad: avg_pool2 / upsample2_nearest / concat") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var p = t.avg_pool2(v[0]);
        Var u = t.upsample2_nearest(p);
        Var c = t.concat_channels(u, v[0]);
        return t.sum(t.mul(c, c));
    };
    CHECK(grad_check<double>(f, {rnd({1, 2, 4, 4}, "g-pool")}, kEps) < kTol);
}

TEST_CASE("grad: reblur w.r.t. image and field") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var field = t.softmax_channels(v[1]);
        Var y = t.reblur(v[0], field);
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 2, 5, 5}, "g-rb-x", 0, 1), rnd({1, 9, 5, 5}, "g-rb-f", -1, 1)},
              kEps) < kTol);
}

TEST_CASE("grad: fft2 -> complex_l1_mean") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        CVar a = t.fft2(v[0]);
        CVar b = t.fft2(v[1]);
        return t.complex_l1_mean(a, b);
    };
    CHECK(grad_check<double>(f, {rnd({1, 1, 4, 4}, "g-fl-a"), rnd({1, 1, 4, 4}, "g-fl-b")},
                             kEps) < kTol);
}

TEST_CASE("grad: fft2 -> cmul -> ifft2_real chain") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        CVar a = t.fft2(v[0]);
        CVar b = t.fft2(v[1]);
        Var y = t.ifft2_real(t.cmul(a, b));
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(f, {rnd({1, 1, 4, 4}, "g-conv-thm-a"), rnd({1, 1, 4, 4}, "g-conv-thm-b")},
                             kEps) < kTol);
}

TEST_CASE("grad: as_complex and cmul_bcast") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        CVar spec = t.fft2(v[0]);
        CVar w = t.as_complex(v[1]);
        Var y = t.ifft2_real(t.cmul_bcast(spec, w));
        return t.sum(t.mul(y, y));
    };
    CHECK(grad_check<double>(f, {rnd({2, 3, 4, 4}, "g-bc-x"), rnd({2, 3, 4, 4}, "g-bc-w")},
                             kEps) < kTol);
}

TEST_CASE("grad: mean and mean_abs_diff") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        return t.weighted_sum({{1.0, t.mean(t.mul(v[0], v[0]))}, {0.5, t.mean_abs_diff(v[0], v[1])}});
    };
    // keep |a-b| away from zero so the L1 kink is not sampled
    Tensor64 a = rnd({2, 3, 3}, "g-mad-a", 0.5, 1.0);
    Tensor64 b = rnd({2, 3, 3}, "g-mad-b", -1.0, -0.5);
    CHECK(grad_check<double>(f, {a, b}, kEps) < kTol);
}

TEST_CASE("grad: coordinate subsampling stays sound") {
    auto f = [](Tape64& t, const std::vector<Var>& v) {
        Var y = t.conv2d(v[0], v[1], v[2], 1, 1);
        return t.mean(t.mul(y, y));
    };
    CHECK(grad_check<double>(
              f, {rnd({1, 3, 6, 6}, "g-sub-x"), rnd({4, 3, 3, 3}, "g-sub-w"), rnd({4}, "g-sub-b")},
              kEps, 20, 5) < kTol);
}
