#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fdb/blur.hpp"
#include "fdb/errors.hpp"
#include "fdb/train.hpp"

using namespace fdb;

namespace {

LoadedDatasetT<double> make_data(int n, int hw, int k, std::uint64_t seed) {
    LoadedDatasetT<double> d;
    d.k = k;
    for (int i = 0; i < n; ++i) {
        Rng rng = named_rng(seed, "img" + std::to_string(i));
        TensorT<double> sharp = TensorT<double>::zeros({3, hw, hw});
        for (auto& v : sharp.data) v = rng.uniform();
        auto field = blur::synth_kernel_field<double>(hw, hw, k, seed + 100 + i,
                                                      (k - 1) / 2.0, 2.0);
        d.sharp.push_back(sharp);
        d.blurry.push_back(blur::reblur(sharp, field));
        d.fields.push_back(blur::field_to_channels(field));
    }
    return d;
}

KEConfig mini_ke() {
    KEConfig c;
    c.levels = 2;
    c.width = 4;
    c.k = 3;
    return c;
}

DeblurNetConfig mini_net() {
    DeblurNetConfig c;
    c.channels = {4, 8, 16};
    c.enc_ftb = 1;
    c.dec_ftb = 1;
    c.k = 3;
    c.dhat = 4;
    return c;
}

TrainConfig mini_train(int stage, int iters, std::uint64_t seed) {
    TrainConfig c;
    c.stage = stage;
    c.iterations = iters;
    c.batch_size = 2;
    c.patch = 16;
    c.seed = seed;
    c.log_every = 5;
    return c;
}

}  // namespace

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(0, 100, 1e-3, 1e-7) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(cosine_lr(100, 100, 1e-3, 1e-7) == doctest::Approx(1e-7).epsilon(1e-12));
    CHECK(cosine_lr(50, 100, 1e-3, 1e-7) ==
          doctest::Approx(0.5 * (1e-3 + 1e-7)).epsilon(1e-12));
    for (int i = 0; i < 100; ++i)
        CHECK(cosine_lr(i, 100, 1e-3, 1e-7) > cosine_lr(i + 1, 100, 1e-3, 1e-7));
    CHECK(cosine_lr(0, 0, 1e-3, 1e-7) == 1e-3);
}

TEST_CASE("content and frequency losses on constant offsets") {
    TapeT<double> tape;
    Rng rng(3);
    TensorT<double> base = TensorT<double>::zeros({1, 2, 4, 4});
    for (auto& v : base.data) v = rng.uniform();
    TensorT<double> shifted = base;
    for (auto& v : shifted.data) v += 0.25;
    Var x = tape.leaf(base, false);
    Var xs = tape.leaf(shifted, false);

    CHECK(tape.scalar_value(loss_cont(tape, xs, x)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(tape.scalar_value(loss_cont(tape, x, x)) == 0.0);
    CHECK(tape.scalar_value(loss_freq(tape, x, x)) == 0.0);
    // only the DC bin moves, by offset * H * W; the mean spreads it back out
    CHECK(tape.scalar_value(loss_freq(tape, xs, x)) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("weighted phase losses reduce to content at zero lambda") {
    TapeT<double> tape;
    Rng rng(4);
    TensorT<double> a = TensorT<double>::zeros({1, 1, 4, 4});
    TensorT<double> b = a;
    for (auto& v : a.data) v = rng.uniform();
    for (auto& v : b.data) v = rng.uniform();
    Var xh = tape.leaf(a, false);
    Var x = tape.leaf(b, false);
    const double cont = tape.scalar_value(loss_cont(tape, xh, x));
    const double freq = tape.scalar_value(loss_freq(tape, xh, x));
    CHECK(tape.scalar_value(loss_phase2(tape, xh, x, 0.0)) ==
          doctest::Approx(cont).epsilon(1e-12));
    CHECK(tape.scalar_value(loss_phase2(tape, xh, x, 0.1)) ==
          doctest::Approx(cont + 0.1 * freq).epsilon(1e-12));

    auto field = blur::delta_field<double>(4, 4, 3);
    TensorT<double> fc = blur::field_to_channels(field);
    Var f = tape.leaf(fc, false);
    Var y = tape.leaf(b, false);
    CHECK(tape.scalar_value(loss_phase3(tape, xh, x, y, f, 0.0, 0.0)) ==
          doctest::Approx(cont).epsilon(1e-12));
    // delta field makes reblur the identity, so the reblur term equals L1(xh, y)
    const double l1_xy = tape.scalar_value(tape.mean_abs_diff(xh, y));
    CHECK(tape.scalar_value(loss_phase3(tape, xh, x, y, f, 0.1, 0.5)) ==
          doctest::Approx(cont + 0.1 * freq + 0.5 * l1_xy).epsilon(1e-12));
    CHECK(tape.scalar_value(loss_ke(tape, f, xh, y)) ==
          doctest::Approx(l1_xy).epsilon(1e-12));
}

TEST_CASE("adam hand-stepped scalar and zero-grad no-op") {
    ParamStoreT<double> store(0);
    store.get("p", {1}, Init::ones);
    AdamT<double> adam;

    TensorT<double> g = TensorT<double>::zeros({1});
    adam.step(store, {{"p", &g}}, 0.1);
    CHECK(store.at("p").data[0] == 1.0);  // zero grad: mhat 0, update 0

    adam.reset();
    g.data[0] = 1.0;
    adam.step(store, {{"p", &g}}, 0.1);
    // m=0.1, v=0.1, bias-corrected both to 1 -> step = lr/(1+eps)
    CHECK(store.at("p").data[0] == doctest::Approx(0.9).epsilon(1e-7));
    adam.step(store, {{"p", &g}}, 0.1);
    CHECK(store.at("p").data[0] == doctest::Approx(0.8).epsilon(1e-7));
    CHECK(adam.steps() == 2);
}

TEST_CASE("adam skips non-finite gradients") {
    ParamStoreT<double> store(0);
    store.get("p", {2}, Init::ones);
    AdamT<double> adam;
    TensorT<double> g = TensorT<double>::zeros({2});
    g.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(adam.step(store, {{"p", &g}}, 0.1) == 1);
    CHECK(store.at("p").data[0] == 1.0);
    CHECK(store.at("p").data[1] == 1.0);

    TensorT<double> bad = TensorT<double>::zeros({3});
    CHECK_THROWS_AS(adam.step(store, {{"p", &bad}}, 0.1), InternalError);
}

TEST_CASE("adam descends a quadratic bowl") {
    ParamStoreT<double> store(0);
    store.get("p", {1}, Init::zeros);
    AdamT<double> adam;
    TensorT<double> g = TensorT<double>::zeros({1});
    for (int i = 0; i < 400; ++i) {
        g.data[0] = 2.0 * (store.at("p").data[0] - 3.0);
        adam.step(store, {{"p", &g}}, 0.05);
    }
    CHECK(store.at("p").data[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("stage I reduces the kernel loss and is seed-deterministic") {
    auto data = make_data(3, 16, 3, 21);
    auto run = [&](std::uint64_t seed) {
        ParamStoreT<double> ke(seed), net(seed + 1);
        auto out = run_stage(mini_train(1, 40, seed), mini_ke(), mini_net(), data, ke, net,
                             false);
        return out;
    };
    auto a = run(5);
    CHECK(a.final_loss < a.initial_loss);
    CHECK(a.skipped_updates == 0);
    CHECK(a.report.size() > 4);
    CHECK(a.timing.size() > 0);

    auto b = run(5);
    CHECK(a.report == b.report);
    CHECK(a.final_loss == b.final_loss);
    auto c = run(6);
    CHECK(a.report != c.report);
}

TEST_CASE("stage II freezes the estimator and trains the backbone") {
    auto data = make_data(2, 16, 3, 22);
    ParamStoreT<double> ke(5), net(6);
    run_stage(mini_train(1, 8, 1), mini_ke(), mini_net(), data, ke, net, false);

    std::map<std::string, TensorT<double>> ke_before = ke.all();
    auto out = run_stage(mini_train(2, 6, 2), mini_ke(), mini_net(), data, ke, net, false);
    CHECK(out.skipped_updates == 0);

    REQUIRE(ke.count() == ke_before.size());
    for (const auto& [name, t] : ke_before) {
        const auto& now = ke.at(name).data;
        REQUIRE(now.size() == t.data.size());
        for (std::size_t i = 0; i < now.size(); ++i) CHECK(now[i] == t.data[i]);
    }
    bool net_changed = false;
    for (double v : net.at("backbone.out.w").data)
        if (v != 0.0) net_changed = true;
    CHECK(net_changed);
}

TEST_CASE("stage III updates both stores") {
    auto data = make_data(2, 16, 3, 23);
    ParamStoreT<double> ke(5), net(6);
    run_stage(mini_train(1, 6, 1), mini_ke(), mini_net(), data, ke, net, false);
    run_stage(mini_train(2, 4, 2), mini_ke(), mini_net(), data, ke, net, false);

    std::map<std::string, TensorT<double>> ke_before = ke.all();
    run_stage(mini_train(3, 4, 3), mini_ke(), mini_net(), data, ke, net, false);
    bool ke_changed = false;
    for (const auto& [name, t] : ke_before)
        for (std::size_t i = 0; i < t.data.size(); ++i)
            if (ke.at(name).data[i] != t.data[i]) ke_changed = true;
    CHECK(ke_changed);
}

TEST_CASE("training rejects inconsistent configurations") {
    auto data = make_data(2, 16, 3, 24);
    ParamStoreT<double> ke(5), net(6);

    CHECK_THROWS_AS(run_stage(mini_train(2, 1, 1), mini_ke(), mini_net(), data, ke, net,
                              false),
                    PrereqError);  // no stage I parameters yet

    auto cfg = mini_train(2, 1, 1);
    cfg.freeze_ke = 0;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, true), ParamError);
    cfg = mini_train(1, 1, 1);
    cfg.freeze_ke = 1;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);
    cfg = mini_train(3, 1, 1);
    cfg.freeze_ke = 1;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);

    cfg = mini_train(1, 1, 1);
    cfg.patch = 10;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);
    cfg.patch = 0;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);
    cfg = mini_train(4, 1, 1);
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);
    cfg = mini_train(1, 1, 1);
    cfg.base_lr = 0;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);
    cfg = mini_train(1, 1, 1);
    cfg.min_lr = 2 * cfg.base_lr;
    CHECK_THROWS_AS(run_stage(cfg, mini_ke(), mini_net(), data, ke, net, false), ParamError);

    auto base = mini_net();
    base.use_prior = false;
    base.use_fim_encoder = base.use_fim_decoder = false;
    CHECK_THROWS_AS(run_stage(mini_train(1, 1, 1), mini_ke(), base, data, ke, net, false),
                    CompatError);
    CHECK_THROWS_AS(run_stage(mini_train(2, 1, 1), mini_ke(), base, data, ke, net, true),
                    CompatError);
    CHECK_THROWS_AS(run_stage(mini_train(1, 1, 1), mini_ke(), mini_net(), data, ke, net,
                              true),
                    CompatError);

    auto nofield = data;
    nofield.fields[0] = TensorT<double>{};
    CHECK_THROWS_AS(run_stage(mini_train(2, 1, 1), mini_ke(), mini_net(), nofield, ke, net,
                              true),
                    PrereqError);
}

TEST_CASE("non-blind and baseline stages run without estimator parameters") {
    auto data = make_data(2, 16, 3, 25);
    ParamStoreT<double> ke(5), net(6);
    auto out = run_stage(mini_train(2, 3, 1), mini_ke(), mini_net(), data, ke, net, true);
    CHECK(out.report.front().find("mode=non_blind") != std::string::npos);
    CHECK(ke.count() == 0);

    auto base = mini_net();
    base.use_prior = false;
    base.use_fim_encoder = base.use_fim_decoder = false;
    ParamStoreT<double> net2(7);
    auto out2 = run_stage(mini_train(2, 3, 1), mini_ke(), base, data, ke, net2, false);
    CHECK(out2.report.front().find("mode=baseline") != std::string::npos);
    auto out3 = run_stage(mini_train(3, 3, 2), mini_ke(), base, data, ke, net2, false);
    CHECK(out3.report.front().find("mode=baseline") != std::string::npos);
}

TEST_CASE("zero iterations change nothing") {
    auto data = make_data(2, 16, 3, 26);
    ParamStoreT<double> ke(5), net(6);
    auto out = run_stage(mini_train(1, 0, 1), mini_ke(), mini_net(), data, ke, net, false);
    CHECK(out.initial_loss == out.final_loss);
    // params created on demand during the loss probes must still equal a
    // fresh same-seed initialization
    ParamStoreT<double> ke2(5);
    estimate_kernels(ke2, mini_ke(), data.blurry[0]);
    estimate_kernels(ke, mini_ke(), data.blurry[0]);
    for (const auto& [name, t] : ke2.all())
        for (std::size_t i = 0; i < t.data.size(); ++i)
            CHECK(ke.at(name).data[i] == t.data[i]);
}

TEST_CASE("evaluation at identity init reproduces the blurry metrics") {
    auto data = make_data(2, 16, 3, 27);
    ParamStoreT<double> ke(5), net(6);
    run_stage(mini_train(1, 2, 1), mini_ke(), mini_net(), data, ke, net, false);

    std::vector<TensorT<double>> dumped;
    auto out = evaluate(mini_ke(), mini_net(), data, ke, net, false, &dumped);
    REQUIRE(out.psnr_xhat.size() == 2);
    REQUIRE(dumped.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(out.psnr_xhat[i] == doctest::Approx(out.psnr_y[i]).epsilon(1e-9));
        CHECK(out.ssim_xhat[i] == doctest::Approx(out.ssim_y[i]).epsilon(1e-9));
        CHECK(dumped[i].shape == data.sharp[i].shape);
    }
    CHECK(out.report.size() == 3);
    CHECK(out.mean_psnr_xhat == doctest::Approx(out.mean_psnr_y).epsilon(1e-9));

    ParamStoreT<double> empty_ke(9);
    CHECK_THROWS_AS(evaluate<double>(mini_ke(), mini_net(), data, empty_ke, net, false, nullptr),
                    PrereqError);
    auto nofield = data;
    nofield.fields[0] = TensorT<double>{};
    CHECK_THROWS_AS(evaluate<double>(mini_ke(), mini_net(), nofield, ke, net, true, nullptr),
                    PrereqError);
}
