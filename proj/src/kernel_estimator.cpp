#include "fdb/kernel_estimator.hpp"

#include <string>
#include <vector>

#include "fdb/errors.hpp"
#include "fdb/nn.hpp"

namespace fdb {

namespace {
constexpr double kSlope = 0.1;
}

template <typename T>
Var ke_forward(TapeT<T>& tape, BinderT<T>& P, const KEConfig& cfg, Var y) {
    if (cfg.levels < 1 || cfg.width < 1 || cfg.k < 1 || cfg.k % 2 == 0)
        throw ParamError("bad kernel estimator config");
    const auto& d = tape.val(y).shape;
    if (d.size() != 4 || d[1] != cfg.in_channels) throw ParamError("ke_forward expects [B,C,H,W]");
    const int div = 1 << (cfg.levels - 1);
    if (d[2] % div != 0 || d[3] % div != 0)
        throw InternalError("ke_forward input dims not divisible by " + std::to_string(div));

    const T slope = T(kSlope);
    auto ch = [&](int lvl) { return cfg.width << lvl; };
    auto act_conv = [&](const std::string& name, Var x, int cin, int cout, int stride) {
        return tape.leaky_relu(nn::conv(tape, P, "ke." + name, x, cin, cout, 3, stride), slope);
    };

    std::vector<Var> skips;
    Var h = act_conv("enc0.c1", y, cfg.in_channels, ch(0), 1);
    h = act_conv("enc0.c2", h, ch(0), ch(0), 1);
    skips.push_back(h);
    for (int lvl = 1; lvl < cfg.levels; ++lvl) {
        const std::string tag = std::to_string(lvl);
        h = act_conv("down" + tag, h, ch(lvl - 1), ch(lvl), 2);
        h = act_conv("enc" + tag + ".c1", h, ch(lvl), ch(lvl), 1);
        if (lvl + 1 < cfg.levels) skips.push_back(h);
    }
    for (int lvl = cfg.levels - 2; lvl >= 0; --lvl) {
        const std::string tag = std::to_string(lvl);
        h = tape.upsample2_nearest(h);
        h = act_conv("up" + tag, h, ch(lvl + 1), ch(lvl), 1);
        h = tape.concat_channels(h, skips[static_cast<std::size_t>(lvl)]);
        h = act_conv("dec" + tag + ".c1", h, 2 * ch(lvl), ch(lvl), 1);
    }
    Var head = nn::conv(tape, P, "ke.head", h, ch(0), cfg.k * cfg.k, 1);
    return tape.softmax_channels(head);
}

template <typename T>
PixelKernelFieldT<T> estimate_kernels(ParamStoreT<T>& store, const KEConfig& cfg,
                                            const TensorT<T>& y) {
    const auto& d = y.shape;
    if (d.size() != 3) throw ParamError("estimate_kernels expects [C,H,W]");
    const int H = d[1], W = d[2];
    const int div = 1 << (cfg.levels - 1);
    TensorT<T> padded = nn::pad_to_multiple(y, div);
    padded.shape = Shape{1, d[0], padded.shape[1], padded.shape[2]};

    TapeT<T> tape;
    BinderT<T> P(tape, store, false);
    Var out = ke_forward(tape, P, cfg, tape.leaf(std::move(padded), false));
    return blur::channels_to_field(nn::crop_spatial(tape.val(out), H, W));
}

template Var ke_forward<float>(TapeT<float>&, BinderT<float>&, const KEConfig&, Var);
template Var ke_forward<double>(TapeT<double>&, BinderT<double>&, const KEConfig&, Var);
template PixelKernelFieldT<float> estimate_kernels<float>(ParamStoreT<float>&,
                                                                const KEConfig&,
                                                                const TensorT<float>&);
template PixelKernelFieldT<double> estimate_kernels<double>(ParamStoreT<double>&,
                                                                  const KEConfig&,
                                                                  const TensorT<double>&);

}  // namespace fdb
