#include <algorithm>

#include "fdb/fft.hpp"
#include "fdb/simd.hpp"
#include "fdb/tape.hpp"

namespace fdb {

template <typename T>
CVar TapeT<T>::fft2(Var x) {
    const auto& vx = val(x);
    if (vx.rank() < 2) throw ParamError("fft2: tensor rank must be >= 2");
    ComplexGridT<T> out = fft::fft2(vx);
    const bool ng = needs_grad(x);
    int id = push_complex(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix](TapeT& t) {
            // adjoint of the unnormalized forward transform on a real input:
            // dx = H*W * Re(ifft2(g))
            const auto& g = t.node(id).cgrad;
            const T hw = static_cast<T>(static_cast<std::int64_t>(g.height()) * g.width());
            TensorT<T> back = fft::ifft2_real(g);
            simd::active<T>().axpy(t.gbuf(ix).data.data(), hw, back.data.data(),
                                   back.data.size());
        };
    }
    return CVar{id};
}

template <typename T>
Var TapeT<T>::ifft2_real(CVar X, T* max_imag) {
    const auto& vX = cval(X);
    TensorT<T> out = fft::ifft2_real(vX, max_imag);
    const bool ng = node(X.id).needs_grad;
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int iX = X.id;
        node(id).back = [id, iX](TapeT& t) {
            // dX = (1/(H*W)) * fft2(g), componentwise on (re, im)
            const auto& g = t.node(id).grad;
            ComplexGridT<T> spec = fft::fft2(g);
            const T inv = T(1) / static_cast<T>(static_cast<std::int64_t>(spec.height()) *
                                                spec.width());
            auto& gX = t.cgbuf(iX);
            simd::active<T>().axpy(gX.re.data(), inv, spec.re.data(), spec.re.size());
            simd::active<T>().axpy(gX.im.data(), inv, spec.im.data(), spec.im.size());
        };
    }
    return Var{id};
}

template <typename T>
CVar TapeT<T>::cmul(CVar a, CVar b) {
    const auto& va = cval(a);
    const auto& vb = cval(b);
    if (!va.same_shape(vb)) throw ParamError("cmul: shape mismatch");
    ComplexGridT<T> out = fft::cmul(va, vb);
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    int id = push_complex(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib](TapeT& t) {
            const auto& g = t.node(id).cgrad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad) {
                const auto& vb = t.node(ib).cvalue;
                auto& ga = t.cgbuf(ia);
                k.cmul_conj_acc(ga.re.data(), ga.im.data(), g.re.data(), g.im.data(),
                                vb.re.data(), vb.im.data(), g.re.size());
            }
            if (t.node(ib).needs_grad) {
                const auto& va = t.node(ia).cvalue;
                auto& gb = t.cgbuf(ib);
                k.cmul_conj_acc(gb.re.data(), gb.im.data(), g.re.data(), g.im.data(),
                                va.re.data(), va.im.data(), g.re.size());
            }
        };
    }
    return CVar{id};
}

template <typename T>
CVar TapeT<T>::cmul_bcast(CVar a, CVar w) {
    const auto& va = cval(a);
    const auto& vw = cval(w);
    if (va.shape.size() != 4 || vw.shape.size() != 3)
        throw ParamError("cmul_bcast: expected [B,C,H,W] and [C,H,W]");
    if (va.shape[1] != vw.shape[0] || va.shape[2] != vw.shape[1] || va.shape[3] != vw.shape[2])
        throw ParamError("cmul_bcast: grid dims must match");
    const int B = va.shape[0];
    const std::size_t plane = vw.re.size();
    ComplexGridT<T> out(va.shape);
    const auto& k = simd::active<T>();
    for (int b = 0; b < B; ++b)
        k.cmul(out.re.data() + b * plane, out.im.data() + b * plane, va.re.data() + b * plane,
               va.im.data() + b * plane, vw.re.data(), vw.im.data(), plane);
    const bool ng = node(a.id).needs_grad || node(w.id).needs_grad;
    int id = push_complex(std::move(out), ng);
    if (ng) {
        const int ia = a.id, iw = w.id;
        node(id).back = [id, ia, iw, B, plane](TapeT& t) {
            const auto& g = t.node(id).cgrad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad) {
                const auto& vw = t.node(iw).cvalue;
                auto& ga = t.cgbuf(ia);
                for (int b = 0; b < B; ++b)
                    k.cmul_conj_acc(ga.re.data() + b * plane, ga.im.data() + b * plane,
                                    g.re.data() + b * plane, g.im.data() + b * plane,
                                    vw.re.data(), vw.im.data(), plane);
            }
            if (t.node(iw).needs_grad) {
                const auto& va = t.node(ia).cvalue;
                auto& gw = t.cgbuf(iw);
                for (int b = 0; b < B; ++b)
                    k.cmul_conj_acc(gw.re.data(), gw.im.data(), g.re.data() + b * plane,
                                    g.im.data() + b * plane, va.re.data() + b * plane,
                                    va.im.data() + b * plane, plane);
            }
        };
    }
    return CVar{id};
}

template <typename T>
CVar TapeT<T>::as_complex(Var x) {
    const auto& vx = val(x);
    if (vx.rank() < 3 || vx.dim(0) != 2)
        throw ParamError("as_complex: expected [2,...] with re/im planes");
    Shape cs(vx.shape.begin() + 1, vx.shape.end());
    ComplexGridT<T> out(cs);
    const std::size_t n = out.re.size();
    std::copy_n(vx.data.data(), n, out.re.data());
    std::copy_n(vx.data.data() + n, n, out.im.data());
    const bool ng = needs_grad(x);
    int id = push_complex(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, n](TapeT& t) {
            const auto& g = t.node(id).cgrad;
            auto& gx = t.gbuf(ix);
            const auto& k = simd::active<T>();
            k.add(gx.data.data(), gx.data.data(), g.re.data(), n);
            k.add(gx.data.data() + n, gx.data.data() + n, g.im.data(), n);
        };
    }
    return CVar{id};
}

template <typename T>
Var TapeT<T>::complex_l1_mean(CVar a, CVar b) {
    const auto& va = cval(a);
    const auto& vb = cval(b);
    if (!va.same_shape(vb)) throw ParamError("complex_l1_mean: shape mismatch");
    const std::size_t n = va.re.size();
    const T inv = T(1) / static_cast<T>(n);
    const auto& k = simd::active<T>();
    const T s = (k.abs_diff_sum(va.re.data(), vb.re.data(), n) +
                 k.abs_diff_sum(va.im.data(), vb.im.data(), n)) *
                inv;
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    int id = push_real(TensorT<T>::scalar(s), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib, inv, n](TapeT& t) {
            const T g = t.node(id).grad.data[0] * inv;
            const auto& va = t.node(ia).cvalue;
            const auto& vb = t.node(ib).cvalue;
            const bool wa = t.node(ia).needs_grad, wb = t.node(ib).needs_grad;
            ComplexGridT<T>* ga = wa ? &t.cgbuf(ia) : nullptr;
            ComplexGridT<T>* gb = wb ? &t.cgbuf(ib) : nullptr;
            for (std::size_t i = 0; i < n; ++i) {
                const T dre = va.re[i] - vb.re[i];
                const T dim = va.im[i] - vb.im[i];
                const T sre = dre > T(0) ? g : (dre < T(0) ? -g : T(0));
                const T sim = dim > T(0) ? g : (dim < T(0) ? -g : T(0));
                if (ga) {
                    ga->re[i] += sre;
                    ga->im[i] += sim;
                }
                if (gb) {
                    gb->re[i] -= sre;
                    gb->im[i] -= sim;
                }
            }
        };
    }
    return Var{id};
}

template CVar TapeT<float>::fft2(Var);
template CVar TapeT<double>::fft2(Var);
template Var TapeT<float>::ifft2_real(CVar, float*);
template Var TapeT<double>::ifft2_real(CVar, double*);
template CVar TapeT<float>::cmul(CVar, CVar);
template CVar TapeT<double>::cmul(CVar, CVar);
template CVar TapeT<float>::cmul_bcast(CVar, CVar);
template CVar TapeT<double>::cmul_bcast(CVar, CVar);
template CVar TapeT<float>::as_complex(Var);
template CVar TapeT<double>::as_complex(Var);
template Var TapeT<float>::complex_l1_mean(CVar, CVar);
template Var TapeT<double>::complex_l1_mean(CVar, CVar);

}  // namespace fdb
