#include <cmath>
#include <memory>

#include "fdb/simd.hpp"
#include "fdb/tape.hpp"
#include "pad_util.hpp"

namespace fdb {

template <typename T>
Var TapeT<T>::conv2d(Var input, Var weight, Var bias, int stride, int pad) {
    const auto& vx = val(input);
    const auto& vw = val(weight);
    const auto& vb = val(bias);
    if (vx.rank() != 4 || vw.rank() != 4) throw ParamError("conv2d: expected 4D input and weight");
    const int B = vx.dim(0), Cin = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const int Cout = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
    if (vw.dim(1) != Cin) throw ParamError("conv2d: weight channel mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw ParamError("conv2d: kernel dims must be odd");
    if (vb.numel() != Cout) throw ParamError("conv2d: bias length mismatch");
    if (stride < 1 || pad < 0) throw ParamError("conv2d: bad stride or pad");
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    if (Ho < 1 || Wo < 1) throw ParamError("conv2d: output would be empty");

    auto xp = std::make_shared<TensorT<T>>(detail::pad_zero(vx, pad));
    TensorT<T> out(Shape{B, Cout, Ho, Wo});
    const auto& k = simd::active<T>();
    for (int b = 0; b < B; ++b)
        for (int co = 0; co < Cout; ++co) {
            for (int oi = 0; oi < Ho; ++oi) {
                T* orow = &out.at4(b, co, oi, 0);
                for (int j = 0; j < Wo; ++j) orow[j] = vb[co];
            }
            for (int ci = 0; ci < Cin; ++ci)
                for (int u = 0; u < kh; ++u)
                    for (int v = 0; v < kw; ++v) {
                        const T wv = vw[((static_cast<std::int64_t>(co) * Cin + ci) * kh + u) * kw + v];
                        if (stride == 1) {
                            for (int oi = 0; oi < Ho; ++oi)
                                k.axpy(&out.at4(b, co, oi, 0), wv, &xp->at4(b, ci, oi + u, v),
                                       static_cast<std::size_t>(Wo));
                        } else {
                            for (int oi = 0; oi < Ho; ++oi) {
                                T* orow = &out.at4(b, co, oi, 0);
                                const T* xrow = &xp->at4(b, ci, oi * stride + u, 0);
                                for (int oj = 0; oj < Wo; ++oj)
                                    orow[oj] += wv * xrow[oj * stride + v];
                            }
                        }
                    }
        }

    const bool ng = needs_grad(input) || needs_grad(weight) || needs_grad(bias);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = input.id, iw = weight.id, ib = bias.id;
        node(id).back = [id, ix, iw, ib, xp, B, Cin, Cout, kh, kw, Ho, Wo, stride,
                         pad](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& vw = t.node(iw).value;
            const auto& k = simd::active<T>();

            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                for (int b = 0; b < B; ++b)
                    for (int co = 0; co < Cout; ++co)
                        gb[co] += k.sum(&g.at4(b, co, 0, 0),
                                        static_cast<std::size_t>(Ho) * Wo);
            }
            if (t.node(iw).needs_grad) {
                auto& gw = t.gbuf(iw);
                for (int b = 0; b < B; ++b)
                    for (int co = 0; co < Cout; ++co)
                        for (int ci = 0; ci < Cin; ++ci)
                            for (int u = 0; u < kh; ++u)
                                for (int v = 0; v < kw; ++v) {
                                    T acc = 0;
                                    if (stride == 1) {
                                        for (int oi = 0; oi < Ho; ++oi)
                                            acc += k.dot(&g.at4(b, co, oi, 0),
                                                         &xp->at4(b, ci, oi + u, v),
                                                         static_cast<std::size_t>(Wo));
                                    } else {
                                        for (int oi = 0; oi < Ho; ++oi) {
                                            const T* grow = &g.at4(b, co, oi, 0);
                                            const T* xrow = &xp->at4(b, ci, oi * stride + u, 0);
                                            for (int oj = 0; oj < Wo; ++oj)
                                                acc += grow[oj] * xrow[oj * stride + v];
                                        }
                                    }
                                    gw[((static_cast<std::int64_t>(co) * Cin + ci) * kh + u) * kw +
                                       v] += acc;
                                }
            }
            if (t.node(ix).needs_grad) {
                TensorT<T> gxp(xp->shape);
                for (int b = 0; b < B; ++b)
                    for (int co = 0; co < Cout; ++co)
                        for (int ci = 0; ci < Cin; ++ci)
                            for (int u = 0; u < kh; ++u)
                                for (int v = 0; v < kw; ++v) {
                                    const T wv = vw[((static_cast<std::int64_t>(co) * Cin + ci) * kh +
                                                     u) * kw + v];
                                    if (stride == 1) {
                                        for (int oi = 0; oi < Ho; ++oi)
                                            k.axpy(&gxp.at4(b, ci, oi + u, v), wv,
                                                   &g.at4(b, co, oi, 0),
                                                   static_cast<std::size_t>(Wo));
                                    } else {
                                        for (int oi = 0; oi < Ho; ++oi) {
                                            T* gxrow = &gxp.at4(b, ci, oi * stride + u, 0);
                                            const T* grow = &g.at4(b, co, oi, 0);
                                            for (int oj = 0; oj < Wo; ++oj)
                                                gxrow[oj * stride + v] += wv * grow[oj];
                                        }
                                    }
                                }
                detail::unpad_zero_acc(gxp, pad, t.gbuf(ix));
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::dwconv2d(Var input, Var weight, Var bias, int pad) {
    const auto& vx = val(input);
    const auto& vw = val(weight);
    const auto& vb = val(bias);
    if (vx.rank() != 4 || vw.rank() != 4) throw ParamError("dwconv2d: expected 4D input and weight");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const int kh = vw.dim(2), kw = vw.dim(3);
    if (vw.dim(0) != C || vw.dim(1) != 1)
        throw ParamError("dwconv2d: weight must be [C,1,kh,kw] with one filter per channel");
    if (vb.numel() != C) throw ParamError("dwconv2d: bias length mismatch");
    if (pad != (kh - 1) / 2 || pad != (kw - 1) / 2)
        throw ParamError("dwconv2d: pad must preserve spatial size");

    auto xp = std::make_shared<TensorT<T>>(detail::pad_zero(vx, pad));
    TensorT<T> out(vx.shape);
    const auto& k = simd::active<T>();
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            for (int i = 0; i < H; ++i) {
                T* orow = &out.at4(b, c, i, 0);
                for (int j = 0; j < W; ++j) orow[j] = vb[c];
            }
            for (int u = 0; u < kh; ++u)
                for (int v = 0; v < kw; ++v) {
                    const T wv = vw[(static_cast<std::int64_t>(c) * kh + u) * kw + v];
                    for (int i = 0; i < H; ++i)
                        k.axpy(&out.at4(b, c, i, 0), wv, &xp->at4(b, c, i + u, v),
                               static_cast<std::size_t>(W));
                }
        }

    const bool ng = needs_grad(input) || needs_grad(weight) || needs_grad(bias);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = input.id, iw = weight.id, ib = bias.id;
        node(id).back = [id, ix, iw, ib, xp, B, C, H, W, kh, kw, pad](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& vw = t.node(iw).value;
            const auto& k = simd::active<T>();
            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c)
                        gb[c] += k.sum(&g.at4(b, c, 0, 0), static_cast<std::size_t>(H) * W);
            }
            if (t.node(iw).needs_grad) {
                auto& gw = t.gbuf(iw);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c)
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                T acc = 0;
                                for (int i = 0; i < H; ++i)
                                    acc += k.dot(&g.at4(b, c, i, 0), &xp->at4(b, c, i + u, v),
                                                 static_cast<std::size_t>(W));
                                gw[(static_cast<std::int64_t>(c) * kh + u) * kw + v] += acc;
                            }
            }
            if (t.node(ix).needs_grad) {
                TensorT<T> gxp(xp->shape);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c)
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                const T wv = vw[(static_cast<std::int64_t>(c) * kh + u) * kw + v];
                                for (int i = 0; i < H; ++i)
                                    k.axpy(&gxp.at4(b, c, i + u, v), wv, &g.at4(b, c, i, 0),
                                           static_cast<std::size_t>(W));
                            }
                detail::unpad_zero_acc(gxp, pad, t.gbuf(ix));
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::reblur(Var x, Var field) {
    const auto& vx = val(x);
    const auto& vf = val(field);
    if (vx.rank() != 4 || vf.rank() != 4) throw ParamError("reblur: expected [B,C,H,W] inputs");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const int kk = vf.dim(1);
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
    if (k * k != kk || k % 2 == 0) throw ParamError("reblur: field channels must be odd k squared");
    if (vf.dim(0) != B || vf.dim(2) != H || vf.dim(3) != W)
        throw ParamError("reblur: field dims must match image");
    const int r = (k - 1) / 2;

    auto xp = std::make_shared<TensorT<T>>(detail::pad_replicate(vx, r));
    TensorT<T> out = TensorT<T>::zeros(vx.shape);
    const auto& kt = simd::active<T>();
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) {
                    const int fc = u * k + v;
                    for (int i = 0; i < H; ++i)
                        kt.fmadd(&out.at4(b, c, i, 0), &vf.at4(b, fc, i, 0),
                                 &xp->at4(b, c, i + u, v), static_cast<std::size_t>(W));
                }

    const bool ng = needs_grad(x) || needs_grad(field);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id, ifield = field.id;
        node(id).back = [id, ix, ifield, xp, B, C, H, W, k, r](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& kt = simd::active<T>();
            if (t.node(ifield).needs_grad) {
                auto& gf = t.gbuf(ifield);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c)
                        for (int u = 0; u < k; ++u)
                            for (int v = 0; v < k; ++v) {
                                const int fc = u * k + v;
                                for (int i = 0; i < H; ++i)
                                    kt.fmadd(&gf.at4(b, fc, i, 0), &g.at4(b, c, i, 0),
                                             &xp->at4(b, c, i + u, v),
                                             static_cast<std::size_t>(W));
                            }
            }
            if (t.node(ix).needs_grad) {
                const auto& vf = t.node(ifield).value;
                TensorT<T> gxp(xp->shape);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c)
                        for (int u = 0; u < k; ++u)
                            for (int v = 0; v < k; ++v) {
                                const int fc = u * k + v;
                                for (int i = 0; i < H; ++i)
                                    kt.fmadd(&gxp.at4(b, c, i + u, v), &g.at4(b, c, i, 0),
                                             &vf.at4(b, fc, i, 0), static_cast<std::size_t>(W));
                            }
                detail::unpad_replicate_acc(gxp, r, t.gbuf(ix));
            }
        };
    }
    return Var{id};
}

template Var TapeT<float>::conv2d(Var, Var, Var, int, int);
template Var TapeT<double>::conv2d(Var, Var, Var, int, int);
template Var TapeT<float>::dwconv2d(Var, Var, Var, int);
template Var TapeT<double>::dwconv2d(Var, Var, Var, int);
template Var TapeT<float>::reblur(Var, Var);
template Var TapeT<double>::reblur(Var, Var);

}  // namespace fdb
