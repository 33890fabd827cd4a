#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "fdb/errors.hpp"
#include "fdb/params.hpp"

using namespace fdb;
namespace fs = std::filesystem;

TEST_CASE("parameter creation is deterministic and order-independent") {
    ParamStore64 a(11), b(11);
    a.get("x.w", Shape{4, 3, 3, 3}, Init::fan_in, 27);
    a.get("y.w", Shape{8}, Init::fan_in, 8);
    b.get("y.w", Shape{8}, Init::fan_in, 8);  // opposite creation order
    b.get("x.w", Shape{4, 3, 3, 3}, Init::fan_in, 27);
    CHECK(a.at("x.w").data == b.at("x.w").data);
    CHECK(a.at("y.w").data == b.at("y.w").data);

    ParamStore64 c(12);
    c.get("x.w", Shape{4, 3, 3, 3}, Init::fan_in, 27);
    CHECK(a.at("x.w").data != c.at("x.w").data);

    const double bound = 1.0 / std::sqrt(27.0);
    bool nonzero = false;
    for (double v : a.at("x.w").data) {
        CHECK(std::abs(v) <= bound);
        if (v != 0.0) nonzero = true;
    }
    CHECK(nonzero);
}

TEST_CASE("init kinds") {
    ParamStore64 s(1);
    for (double v : s.get("b", Shape{5}, Init::zeros).data) CHECK(v == 0.0);
    for (double v : s.get("g", Shape{5}, Init::ones).data) CHECK(v == 1.0);
    const auto& w = s.get("w", Shape{2, 3, 4, 4}, Init::spectral_identity);
    for (std::size_t i = 0; i < w.data.size(); ++i)
        CHECK(w.data[i] == (i < w.data.size() / 2 ? 1.0 : 0.0));
    CHECK_THROWS_AS(s.get("bad", Shape{3, 4}, Init::spectral_identity), ParamError);
    CHECK_THROWS_AS(s.get("nf", Shape{3}, Init::fan_in, 0), InternalError);
    CHECK_THROWS_AS(s.get("b", Shape{6}, Init::zeros), ParamError);  // reuse, new shape
}

TEST_CASE("checkpoint archive round-trips") {
    const auto dir = fs::temp_directory_path() / "fdb_params";
    fs::create_directories(dir);
    const std::string p = (dir / "ck.bin").string();

    ParamStore32 s(3);
    s.get("a.w", Shape{2, 2, 3, 3}, Init::fan_in, 18);
    s.get("a.b", Shape{2}, Init::zeros);
    s.get("ln.g", Shape{7}, Init::ones);
    s.save(p);

    {
        std::ifstream in(p, std::ios::binary);
        unsigned char hdr[4];
        in.read(reinterpret_cast<char*>(hdr), 4);
        const std::uint32_t count = hdr[0] | (hdr[1] << 8) | (hdr[2] << 16) | (hdr[3] << 24);
        CHECK(count == 3);
    }

    ParamStore32 t(999);  // seed must not matter after load
    t.load(p);
    CHECK(t.count() == 3);
    CHECK(t.at("a.w").data == s.at("a.w").data);
    CHECK(t.at("a.w").shape == s.at("a.w").shape);
    CHECK(t.at("ln.g").data == s.at("ln.g").data);

    CHECK_THROWS_AS(t.load((dir / "absent.bin").string()), PrereqError);
    {
        std::ofstream out((dir / "trunc.bin").string(), std::ios::binary);
        out.write("\x02\x00\x00\x00\x03\x00\x00\x00ab", 10);
    }
    CHECK_THROWS_AS(t.load((dir / "trunc.bin").string()), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("binder places, dedups, freezes, and routes") {
    ParamStore64 s(5);
    Tape64 tape;

    BinderT<double> frozen(tape, s, false);
    Var w1 = frozen("m.w", Shape{3}, Init::fan_in, 3);
    Var w2 = frozen("m.w", Shape{3}, Init::fan_in, 3);
    CHECK(w1.id == w2.id);
    CHECK_THROWS_AS(frozen("m.w", Shape{4}, Init::fan_in, 4), ParamError);

    Var x = tape.leaf(TensorT<double>::full(Shape{3}, 2.0), true);
    Var loss = tape.sum(tape.mul(x, w1));
    tape.backward(loss);
    CHECK(!tape.has_grad(w1));
    CHECK(tape.grad(x).data == s.at("m.w").data);

    Tape64 tape2;
    BinderT<double> live(tape2, s, true);
    Var w3 = live("m.w", Shape{3}, Init::fan_in, 3);
    Var x2 = tape2.leaf(TensorT<double>::full(Shape{3}, 2.0), false);
    tape2.backward(tape2.sum(tape2.mul(x2, w3)));
    REQUIRE(tape2.has_grad(w3));
    for (double g : tape2.grad(w3).data) CHECK(g == 2.0);
    REQUIRE(live.bound().size() == 1);
    CHECK(live.bound()[0].first == "m.w");

    Tape64 tape3;
    BinderT<double> routed(tape3, s, true);
    Var sub = tape3.leaf(TensorT<double>::full(Shape{3}, 7.0), false);
    routed.route("m.w", sub);
    Var got = routed("m.w", Shape{3}, Init::fan_in, 3);
    CHECK(got.id == sub.id);
    CHECK(routed.bound().empty());
}
