#include "fdb/fim.hpp"

#include <algorithm>
#include <cmath>

#include "fdb/errors.hpp"
#include "fdb/nn.hpp"

namespace fdb {

template <typename T>
Var embed_kernel_features(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var channels,
                          int k2, int dhat) {
    const auto& d = tape.val(channels).shape;
    if (d.size() != 4 || d[1] != k2) throw ParamError("embed_kernel_features expects [B,k*k,H,W]");
    return nn::conv(tape, P, prefix + ".embed", channels, k2, dhat, 1);
}

template <typename T>
KernelPyramid build_pyramid(TapeT<T>& tape, Var b1) {
    const auto& d = tape.val(b1).shape;
    if (d.size() != 4) throw ParamError("build_pyramid expects [B,C,H,W]");
    if (d[2] % 4 != 0 || d[3] % 4 != 0)
        throw ParamError("build_pyramid needs spatial dims divisible by 4");
    KernelPyramid p;
    p.b1 = b1;
    p.b2 = tape.avg_pool2(p.b1);
    p.b3 = tape.avg_pool2(p.b2);
    return p;
}

template <typename T>
QKV project_qkv(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var x_in, Var b_in,
                int c_img, int c_ker, int latent) {
    const auto& dx = tape.val(x_in).shape;
    const auto& db = tape.val(b_in).shape;
    if (dx.size() != 4 || db.size() != 4 || dx[2] != db[2] || dx[3] != db[3])
        throw ParamError("project_qkv spatial dims disagree");
    QKV out;
    out.q = nn::dwconv(tape, P, prefix + ".q.dw",
                       nn::conv(tape, P, prefix + ".q.pw", x_in, c_img, latent, 1), latent, 3);
    out.k = nn::dwconv(tape, P, prefix + ".k.dw",
                       nn::conv(tape, P, prefix + ".k.pw", b_in, c_ker, latent, 1), latent, 3);
    out.v = nn::dwconv(tape, P, prefix + ".v.dw",
                       nn::conv(tape, P, prefix + ".v.pw", b_in, c_ker, latent, 1), latent, 3);
    return out;
}

template <typename T>
Var fa_pre_norm(TapeT<T>& tape, Var q, Var k) {
    if (!(tape.val(q).shape == tape.val(k).shape))
        throw ParamError("fa_pre_norm shapes disagree");
    T resid = 0;
    Var out = tape.ifft2_real(tape.cmul(tape.fft2(q), tape.fft2(k)), &resid);
    // q and k are real, so the product spectrum inverts to a real signal up
    // to roundoff; scale the bound by the signal so large activations do not
    // trip it spuriously
    T peak = T(1);
    for (T v : tape.val(out).data) peak = std::max(peak, std::abs(v));
    const T bound = (sizeof(T) == 4 ? T(1e-5) : T(1e-10)) * peak;
    if (!(resid < bound)) throw InternalError("frequency attention imaginary residue too large");
    return out;
}

template <typename T>
Var frequency_attention(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, Var q, Var k,
                        Var v, int latent) {
    if (!(tape.val(q).shape == tape.val(v).shape))
        throw ParamError("frequency_attention shapes disagree");
    Var normed = nn::layer_norm(tape, P, prefix + ".ln", fa_pre_norm(tape, q, k), latent);
    return tape.mul(normed, v);
}

template <typename T>
Var fim_forward(TapeT<T>& tape, BinderT<T>& P, const std::string& prefix, const FIMConfig& cfg,
                Var x_in, Var b_in) {
    QKV qkv = project_qkv(tape, P, prefix, x_in, b_in, cfg.channels, cfg.dhat, cfg.channels);
    Var a = frequency_attention(tape, P, prefix, qkv.q, qkv.k, qkv.v, cfg.channels);
    Var fused = nn::conv(tape, P, prefix + ".out", a, cfg.channels, cfg.channels, 1, 1, true);
    return cfg.residual ? tape.add(fused, x_in) : fused;
}

#define FDB_FIM_INSTANTIATE(T)                                                                  \
    template Var embed_kernel_features<T>(TapeT<T>&, BinderT<T>&, const std::string&, Var, int, \
                                          int);                                                 \
    template KernelPyramid build_pyramid<T>(TapeT<T>&, Var);                                    \
    template QKV project_qkv<T>(TapeT<T>&, BinderT<T>&, const std::string&, Var, Var, int, int, \
                                int);                                                           \
    template Var fa_pre_norm<T>(TapeT<T>&, Var, Var);                                           \
    template Var frequency_attention<T>(TapeT<T>&, BinderT<T>&, const std::string&, Var, Var,   \
                                        Var, int);                                              \
    template Var fim_forward<T>(TapeT<T>&, BinderT<T>&, const std::string&, const FIMConfig&,   \
                                Var, Var);

FDB_FIM_INSTANTIATE(float)
FDB_FIM_INSTANTIATE(double)

}  // namespace fdb
