#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "fdb/errors.hpp"
#include "fdb/rng.hpp"
#include "fdb/simd.hpp"

using namespace fdb;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng, T lo = T(-2), T hi = T(2)) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return v;
}

// Elementwise kernels must agree bit-for-bit across backends; kernels that
// reorder reductions or contract with fma only need to agree to rounding.
template <typename T>
void check_backend_equivalence(const std::string& backend, T rel_tol) {
    const auto& ref = simd::scalar_table<T>();
    simd::force_backend(backend);
    const auto& alt = simd::active<T>();

    Rng rng = named_rng(99, "simd-equiv-" + backend);
    for (std::size_t n : {std::size_t(1), std::size_t(7), std::size_t(8), std::size_t(64),
                          std::size_t(1000), std::size_t(1003)}) {
        auto a = random_vec<T>(n, rng);
        auto b = random_vec<T>(n, rng);
        std::vector<T> r1(n), r2(n);

        ref.add(r1.data(), a.data(), b.data(), n);
        alt.add(r2.data(), a.data(), b.data(), n);
        CHECK(r1 == r2);

        ref.sub(r1.data(), a.data(), b.data(), n);
        alt.sub(r2.data(), a.data(), b.data(), n);
        CHECK(r1 == r2);

        ref.mul(r1.data(), a.data(), b.data(), n);
        alt.mul(r2.data(), a.data(), b.data(), n);
        CHECK(r1 == r2);

        ref.scale(r1.data(), T(1.5), a.data(), n);
        alt.scale(r2.data(), T(1.5), a.data(), n);
        CHECK(r1 == r2);

        ref.lrelu(r1.data(), a.data(), T(0.1), n);
        alt.lrelu(r2.data(), a.data(), T(0.1), n);
        CHECK(r1 == r2);

        auto d1 = random_vec<T>(n, rng);
        auto d2 = d1;
        ref.fmadd(d1.data(), a.data(), b.data(), n);
        alt.fmadd(d2.data(), a.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(d1[i] - d2[i]) <= rel_tol * (std::abs(d1[i]) + T(1)));

        d1 = random_vec<T>(n, rng);
        d2 = d1;
        ref.axpy(d1.data(), T(0.7), a.data(), n);
        alt.axpy(d2.data(), T(0.7), a.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(d1[i] - d2[i]) <= rel_tol * (std::abs(d1[i]) + T(1)));

        d1 = random_vec<T>(n, rng);
        d2 = d1;
        ref.lrelu_bwd(d1.data(), a.data(), b.data(), T(0.1), n);
        alt.lrelu_bwd(d2.data(), a.data(), b.data(), T(0.1), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(d1[i] - d2[i]) <= rel_tol * (std::abs(d1[i]) + T(1)));

        const T dot1 = ref.dot(a.data(), b.data(), n);
        const T dot2 = alt.dot(a.data(), b.data(), n);
        CHECK(std::abs(dot1 - dot2) <= rel_tol * (std::abs(dot1) + T(1)) * static_cast<T>(n));

        const T s1 = ref.sum(a.data(), n);
        const T s2 = alt.sum(a.data(), n);
        CHECK(std::abs(s1 - s2) <= rel_tol * (std::abs(s1) + T(1)) * static_cast<T>(n));

        const T ad1 = ref.abs_diff_sum(a.data(), b.data(), n);
        const T ad2 = alt.abs_diff_sum(a.data(), b.data(), n);
        CHECK(std::abs(ad1 - ad2) <= rel_tol * (std::abs(ad1) + T(1)) * static_cast<T>(n));

        auto ar = random_vec<T>(n, rng), ai = random_vec<T>(n, rng);
        auto br = random_vec<T>(n, rng), bi = random_vec<T>(n, rng);
        std::vector<T> cr1(n), ci1(n), cr2(n), ci2(n);
        ref.cmul(cr1.data(), ci1.data(), ar.data(), ai.data(), br.data(), bi.data(), n);
        alt.cmul(cr2.data(), ci2.data(), ar.data(), ai.data(), br.data(), bi.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(cr1[i] - cr2[i]) <= rel_tol * (std::abs(cr1[i]) + T(1)));
            CHECK(std::abs(ci1[i] - ci2[i]) <= rel_tol * (std::abs(ci1[i]) + T(1)));
        }

        auto dr1 = random_vec<T>(n, rng), di1 = random_vec<T>(n, rng);
        auto dr2 = dr1, di2 = di1;
        ref.cmul_conj_acc(dr1.data(), di1.data(), ar.data(), ai.data(), br.data(), bi.data(), n);
        alt.cmul_conj_acc(dr2.data(), di2.data(), ar.data(), ai.data(), br.data(), bi.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(dr1[i] - dr2[i]) <= rel_tol * (std::abs(dr1[i]) + T(1)));
            CHECK(std::abs(di1[i] - di2[i]) <= rel_tol * (std::abs(di1[i]) + T(1)));
        }
    }
    simd::force_backend("auto");
}

}  // namespace

TEST_CASE("simd scalar table sanity") {
    const auto& k = simd::scalar_table<double>();
    double a[3] = {1, 2, 3}, b[3] = {4, 5, 6}, r[3];
    k.add(r, a, b, 3);
    CHECK(r[0] == 5);
    CHECK(r[2] == 9);
    CHECK(k.dot(a, b, 3) == doctest::Approx(32.0));
    CHECK(k.sum(a, 3) == doctest::Approx(6.0));
    CHECK(k.abs_diff_sum(a, b, 3) == doctest::Approx(9.0));
    double x[2] = {-1, 2}, y[2];
    k.lrelu(y, x, 0.1, 2);
    CHECK(y[0] == doctest::Approx(-0.1));
    CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("simd backend equivalence") {
    INFO("active backend: " << simd::active_backend());
    for (const std::string& backend : simd::available_backends()) {
        if (backend == "scalar") continue;
        check_backend_equivalence<float>(backend, 1e-5f);
        check_backend_equivalence<double>(backend, 1e-13);
    }
}

TEST_CASE("simd force unknown backend rejected") {
    CHECK_THROWS_AS(simd::force_backend("sse9"), fdb::ParamError);
}
