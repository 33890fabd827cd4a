#include "fdb/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "fdb/errors.hpp"
#include "fdb/nn.hpp"

namespace fdb {

namespace {

constexpr double kSlope = 0.1;

// Learned per-channel spectral weights, stored at the size first trained at.
// At other sizes the stored grid is resampled by nearest normalized frequency
// as a constant, so inference at unseen sizes works without touching the
// trained weights.
template <typename T>
Var spectral_weights(TapeT<T>& tape, BinderT<T>& P, const std::string& name, int c, int h,
                     int w) {
    const Shape want{2, c, h, w};
    if (!P.store().has(name)) return P(name, want, Init::spectral_identity);
    const TensorT<T>& stored = P.store().at(name);
    if (stored.shape == want) return P(name, want, Init::spectral_identity);

    const int h0 = stored.shape[2], w0 = stored.shape[3];
    auto src_bin = [](int f, int n, int n0) {
        int sf = f <= n / 2 ? f : f - n;  // signed frequency
        int s = static_cast<int>(std::lround(static_cast<double>(sf) * n0 / n));
        const int lo = -(n0 / 2), hi = (n0 - 1) / 2;
        s = std::max(lo, std::min(hi, s));
        return s >= 0 ? s : s + n0;
    };
    TensorT<T> remapped(want);
    for (int p = 0; p < 2; ++p)
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < h; ++i) {
                const int si = src_bin(i, h, h0);
                for (int j = 0; j < w; ++j) {
                    const int sj = src_bin(j, w, w0);
                    remapped.data[((static_cast<std::size_t>(p) * c + ch) * h + i) * w + j] =
                        stored.data[((static_cast<std::size_t>(p) * c + ch) * h0 + si) * w0 + sj];
                }
            }
    return tape.leaf(std::move(remapped), false);
}

}  // namespace

template <typename T>
Var ftb_forward(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x, int channels) {
    QKV qkv = project_qkv(tape, P, prefix + ".sa", x, x, channels, channels, channels);
    Var a = frequency_attention(tape, P, prefix + ".sa", qkv.q, qkv.k, qkv.v, channels);
    Var x1 = tape.add(nn::conv(tape, P, prefix + ".sa.out", a, channels, channels, 1, 1, true), x);

    Var inner = nn::conv(tape, P, prefix + ".ffn.in", x1, channels, channels, 1);
    const auto& d = tape.val(inner).shape;
    Var wspec = spectral_weights(tape, P, prefix + ".ffn.wspec", channels, d[2], d[3]);
    Var filt = tape.ifft2_real(tape.cmul_bcast(tape.fft2(inner), tape.as_complex(wspec)));
    Var out = nn::conv(tape, P, prefix + ".ffn.out", filt, channels, channels, 1, 1, true);
    return tape.add(x1, out);
}

template <typename T>
Var deblur_forward(TapeT<T>& tape, BinderT<T>& P, const DeblurNetConfig& cfg, Var y,
                   const KernelPyramid* pyramid) {
    if (cfg.scales != 3) throw ParamError("deblur net is three-scale");
    const auto& d = tape.val(y).shape;
    if (d.size() != 4 || d[1] != cfg.in_channels) throw ParamError("deblur_forward expects [B,C,H,W]");
    if (d[2] % 4 != 0 || d[3] % 4 != 0)
        throw ParamError("deblur_forward needs spatial dims divisible by 4");
    if (cfg.use_prior != (pyramid != nullptr))
        throw ParamError("kernel pyramid must be supplied exactly when the prior is enabled");

    const T slope = T(kSlope);
    const int c0 = cfg.channels[0], c1 = cfg.channels[1], c2 = cfg.channels[2];
    FIMConfig fim0{c0, cfg.dhat, cfg.fim_residual};
    FIMConfig fim1{c1, cfg.dhat, cfg.fim_residual};
    FIMConfig fim2{c2, cfg.dhat, cfg.fim_residual};

    auto run_ftbs = [&](Var h, const std::string& stage, int n, int ch) {
        for (int i = 0; i < n; ++i)
            h = ftb_forward(tape, P, "backbone." + stage + ".ftb" + std::to_string(i), h, ch);
        return h;
    };

    Var x0 = nn::conv(tape, P, "backbone.shallow", y, cfg.in_channels, c0, 3);
    if (pyramid && cfg.use_fim_encoder)
        x0 = fim_forward(tape, P, "fim.enc0", fim0, x0, pyramid->b1);
    x0 = run_ftbs(x0, "s0.enc", cfg.enc_ftb, c0);

    Var x1 = tape.leaky_relu(nn::conv(tape, P, "backbone.down01", x0, c0, c1, 3, 2), slope);
    if (pyramid && cfg.use_fim_encoder && cfg.multiscale)
        x1 = fim_forward(tape, P, "fim.enc1", fim1, x1, pyramid->b2);
    x1 = run_ftbs(x1, "s1.enc", cfg.enc_ftb, c1);

    Var x2 = tape.leaky_relu(nn::conv(tape, P, "backbone.down12", x1, c1, c2, 3, 2), slope);
    if (pyramid && cfg.use_fim_encoder && cfg.multiscale)
        x2 = fim_forward(tape, P, "fim.enc2", fim2, x2, pyramid->b3);
    x2 = run_ftbs(x2, "s2.enc", cfg.enc_ftb, c2);

    Var u1 = tape.leaky_relu(
        nn::conv(tape, P, "backbone.up21", tape.upsample2_nearest(x2), c2, c1, 3), slope);
    u1 = tape.add(u1, x1);
    if (pyramid && cfg.use_fim_decoder && cfg.multiscale)
        u1 = fim_forward(tape, P, "fim.dec1", fim1, u1, pyramid->b2);
    u1 = run_ftbs(u1, "s1.dec", cfg.dec_ftb, c1);

    Var u0 = tape.leaky_relu(
        nn::conv(tape, P, "backbone.up10", tape.upsample2_nearest(u1), c1, c0, 3), slope);
    u0 = tape.add(u0, x0);
    if (pyramid && cfg.use_fim_decoder)
        u0 = fim_forward(tape, P, "fim.dec0", fim0, u0, pyramid->b1);
    u0 = run_ftbs(u0, "s0.dec", cfg.dec_ftb, c0);

    Var refinement = nn::conv(tape, P, "backbone.out", u0, c0, cfg.in_channels, 3, 1, true);
    return tape.add(y, refinement);
}

template <typename T>
Var model_forward(TapeT<T>& tape, BinderT<T>& P, const DeblurNetConfig& cfg, Var y,
                  Var field_channels) {
    if (!cfg.use_prior) {
        if (field_channels.valid())
            throw ParamError("kernel channels supplied with the prior disabled");
        return deblur_forward(tape, P, cfg, y, nullptr);
    }
    if (!field_channels.valid()) throw ParamError("kernel channels required with the prior on");
    Var bfeat =
        embed_kernel_features(tape, P, "fim", field_channels, cfg.k * cfg.k, cfg.dhat);
    KernelPyramid pyr = build_pyramid(tape, bfeat);
    return deblur_forward(tape, P, cfg, y, &pyr);
}

#define FDB_BACKBONE_INSTANTIATE(T)                                                          \
    template Var ftb_forward<T>(TapeT<T>&, BinderT<T>&, const std::string&, Var, int);       \
    template Var deblur_forward<T>(TapeT<T>&, BinderT<T>&, const DeblurNetConfig&, Var,      \
                                   const KernelPyramid*);                                    \
    template Var model_forward<T>(TapeT<T>&, BinderT<T>&, const DeblurNetConfig&, Var, Var);

FDB_BACKBONE_INSTANTIATE(float)
FDB_BACKBONE_INSTANTIATE(double)

}  // namespace fdb
